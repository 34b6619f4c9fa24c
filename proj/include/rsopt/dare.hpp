#pragma once

// The per-eigenvalue 2x2 discrete algebraic Riccati equation
//   X = A^T X A + A^T X B (gamma^2 - B^T X B)^{-1} B^T X A + Q
// with A the modal companion block, B = (-alpha, 0)^T, Q = [[lambda/2,0],[0,0]]
// and gamma^2 = d/theta.  Solved by value iteration from X_0 = Q; the GD
// closed form serves as an independent oracle, and the dimension-reduction
// check reassembles the full 2d x 2d solution and measures its defect.

#include <cmath>
#include <cstdio>
#include <string>

#include "rsopt/gmm.hpp"
#include "rsopt/problems.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

struct DareInstance {
  double lambda = 0;
  GmmParams params;
  double gamma = 0;  // gamma^2 = d/theta
  Matrix2 A_tilde;
  Vector2 B_tilde;
  Matrix2 Q_tilde;

  static DareInstance make(double lambda, const GmmParams& params,
                           double theta, Eigen::Index d) {
    if (!(lambda > 0)) throw ValidationError("dare: lambda must be > 0");
    if (!(theta > 0))
      throw ValidationError("dare: theta must be > 0 (Riccati route)");
    if (d <= 0) throw ValidationError("dare: dimension must be > 0");
    params.validate();
    DareInstance inst;
    inst.lambda = lambda;
    inst.params = params;
    inst.gamma = std::sqrt(double(d) / theta);
    inst.A_tilde = modal_block(params, lambda);
    inst.B_tilde << -params.alpha, 0.0;
    inst.Q_tilde << lambda / 2.0, 0.0, 0.0, 0.0;
    return inst;
  }
};

struct DareSolution {
  Matrix2 X_tilde;
  double residual = 0;
  double closed_loop_radius = 0;  // rho(A + gamma^{-2} B B^T X)
  long iterations = 0;
};

namespace detail {

inline double min_eig_2x2_sym(const Matrix2& S) {
  const double tr = S(0, 0) + S(1, 1);
  const double det = S(0, 0) * S(1, 1) - S(0, 1) * S(1, 0);
  const double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  return tr / 2.0 - disc;
}

inline Matrix2 dare_rhs(const DareInstance& inst, const Matrix2& X,
                        double denom) {
  const Matrix2& A = inst.A_tilde;
  const Vector2& B = inst.B_tilde;
  const Vector2 AtXB = A.transpose() * X * B;
  Matrix2 next = A.transpose() * X * A + AtXB * AtXB.transpose() / denom +
                 inst.Q_tilde;
  return (next + next.transpose()) / 2.0;
}

}  // namespace detail

inline DareSolution solve_dare_2x2(const DareInstance& inst,
                                   double tol = 1e-13,
                                   long max_iter = 1000000) {
  const double gamma2 = inst.gamma * inst.gamma;
  const double residual_tol = 1e-10;
  const double psd_slack = 1e-10;

  Matrix2 X = inst.Q_tilde;
  long it = 0;
  for (; it < max_iter; ++it) {
    const double denom = gamma2 - inst.B_tilde.dot(X * inst.B_tilde);
    if (!(denom > 0))
      throw NumericalError(
          "dare: gain exceeded (gamma^2 - B^T X B <= 0); theta is at or past "
          "d/Hinf^2 for this mode");
    const Matrix2 next = detail::dare_rhs(inst, X, denom);
    const double change = (next - X).norm();
    X = next;
    if (change < tol) break;
  }
  if (it >= max_iter) {
    const double denom = gamma2 - inst.B_tilde.dot(X * inst.B_tilde);
    const double res =
        denom > 0 ? (detail::dare_rhs(inst, X, denom) - X).norm()
                  : std::numeric_limits<double>::infinity();
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "dare: no convergence in %ld iterations (residual %.3e); "
                  "theta likely near d/Hinf^2",
                  max_iter, res);
    throw NumericalError(buf);
  }

  DareSolution sol;
  sol.X_tilde = X;
  sol.iterations = it + 1;
  const double denom = gamma2 - inst.B_tilde.dot(X * inst.B_tilde);
  if (!(denom > 0))
    throw NumericalError("dare: gain exceeded at converged iterate");
  sol.residual = (detail::dare_rhs(inst, X, denom) - X).norm();
  if (!(sol.residual < residual_tol))
    throw NumericalError("dare: converged iterate residual above tolerance");
  if (detail::min_eig_2x2_sym(X) < -psd_slack)
    throw NumericalError("dare: solution not PSD");
  // Closed loop A + gamma^{-2} B B^T X keeps the companion shape
  // [[p, q], [1, 0]], so its radius comes from the root formula.
  const double p = inst.A_tilde(0, 0) +
                   inst.B_tilde(0) * inst.B_tilde(0) * X(0, 0) / gamma2;
  const double q = inst.A_tilde(0, 1) +
                   inst.B_tilde(0) * inst.B_tilde(0) * X(0, 1) / gamma2;
  sol.closed_loop_radius = companion_radius(-p, -q);
  if (!(sol.closed_loop_radius < 1.0))
    throw NumericalError("dare: converged solution is not stabilizing");
  return sol;
}

// Closed form for gradient descent: with c = d/(alpha^2 theta),
//   a = lambda/2                                   if 1 - alpha lambda = 0,
//   a = (D - sqrt(D^2 - 2 c lambda))/2 otherwise, D = lambda/2 + c(1-(1-al)^2).
// A negative discriminant flags the infinite-risk regime for this mode.
inline Extd gd_closed_form(double lambda, double alpha, double theta,
                           Eigen::Index d) {
  if (!(lambda > 0)) throw ValidationError("gd_closed_form: lambda must be > 0");
  if (!(alpha > 0)) throw ValidationError("gd_closed_form: alpha must be > 0");
  if (!(theta > 0)) throw ValidationError("gd_closed_form: theta must be > 0");
  if (d <= 0) throw ValidationError("gd_closed_form: dimension must be > 0");
  const double q = 1.0 - alpha * lambda;
  if (q == 0.0) return Extd(lambda / 2.0);
  const double c = double(d) / (alpha * alpha * theta);
  const double D = lambda / 2.0 + c * (1.0 - q * q);
  const double disc = D * D - 2.0 * c * lambda;
  if (disc < 0.0) return Extd::infinity();
  return Extd((D - std::sqrt(disc)) / 2.0);
}

// ---------------------------------------------------------------------------
// Modal reassembly check.  X_bar = (V Sigma) Diag(X^{(i)}) (V Sigma)^T
// with V = Diag(U, U) and the interleaving permutation pi(i) = 2i-1 for
// i <= d, 2(i-d) for i > d (1-indexed); the result is plugged into the full
// 2d x 2d DARE and the defect and closed-loop radius reported.
// ---------------------------------------------------------------------------

// Gelfand estimate of the spectral radius: repeatedly square a normalized
// power of the matrix; rho = lim ||A^k||^{1/k}.
inline double spectral_radius(const Matrix<double>& M, int doublings = 40) {
  if (M.rows() != M.cols())
    throw ValidationError("spectral_radius: matrix not square");
  // Invariant: M^(2^j) = exp(log_scale) * A with ||A|| = 1.
  Matrix<double> A = M;
  double log_scale;
  {
    const double n = A.norm();
    if (n == 0.0) return 0.0;
    A /= n;
    log_scale = std::log(n);
  }
  double k = 1.0;
  for (int j = 0; j < doublings; ++j) {
    A = (A * A).eval();
    k *= 2.0;
    const double n = A.norm();
    if (n == 0.0) return 0.0;  // unit-norm matrix squared to zero: nilpotent
    A /= n;
    log_scale = 2.0 * log_scale + std::log(n);
  }
  return std::exp(log_scale / k);
}

struct DimensionReductionCheck {
  double residual = 0;
  double closed_loop_radius = 0;
};

inline DimensionReductionCheck verify_dimension_reduction(
    const QuadraticProblem<double>& problem, const GmmParams& params,
    double theta) {
  const Eigen::Index d = problem.dim();
  if (d > 8)
    throw ValidationError("dimension reduction check: oracle limited to d<=8");
  if (!(theta > 0))
    throw ValidationError("dimension reduction check: theta must be > 0");
  const double gamma2 = double(d) / theta;

  // Modal solutions in the interleaved ordering.
  Matrix<double> Dblk = Matrix<double>::Zero(2 * d, 2 * d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const DareInstance inst =
        DareInstance::make(problem.eigenvalues(i), params, theta, d);
    const DareSolution sol = solve_dare_2x2(inst);
    Dblk.block<2, 2>(2 * i, 2 * i) = sol.X_tilde;
  }

  // Y = V Sigma with V = Diag(U, U); Sigma routes stacked coordinate i to
  // interleaved coordinate pi(i).
  Matrix<double> V = Matrix<double>::Zero(2 * d, 2 * d);
  V.topLeftCorner(d, d) = problem.U;
  V.bottomRightCorner(d, d) = problem.U;
  Matrix<double> Sigma = Matrix<double>::Zero(2 * d, 2 * d);
  for (Eigen::Index i = 1; i <= 2 * d; ++i) {
    const Eigen::Index pi = (i <= d) ? (2 * i - 1) : (2 * (i - d));
    Sigma(i - 1, pi - 1) = 1.0;
  }
  const Matrix<double> Y = V * Sigma;
  const Matrix<double> Xbar = Y * Dblk * Y.transpose();

  const Matrix<double> A = build_full_A(params, problem.Q);
  const Matrix<double> B = build_full_B<double>(params, d);
  const Matrix<double> Qbar = build_Qbar(problem.Q);

  const Matrix<double> BtXB = B.transpose() * Xbar * B;
  const Matrix<double> mid =
      gamma2 * Matrix<double>::Identity(d, d) - BtXB;
  Eigen::FullPivLU<Matrix<double>> lu(mid);
  if (!lu.isInvertible())
    throw NumericalError("dimension reduction check: gain matrix singular");
  const Matrix<double> rhs = A.transpose() * Xbar * A +
                             A.transpose() * Xbar * B *
                                 lu.solve(B.transpose() * Xbar * A) +
                             Qbar;
  DimensionReductionCheck out;
  out.residual = (Xbar - rhs).norm();
  const Matrix<double> closed_loop =
      A + (B * B.transpose() * Xbar) / gamma2;
  out.closed_loop_radius = spectral_radius(closed_loop);
  return out;
}

}  // namespace rsopt
