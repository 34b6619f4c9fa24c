#pragma once

// Problem classes: strongly convex quadratics (the analysis workhorse) and
// the Huber regression instance used by the large-scale experiment.

#include <cmath>
#include <stdexcept>
#include <vector>

#include "rsopt/jacobi.hpp"
#include "rsopt/rng.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

// ---------------------------------------------------------------------------
// Quadratic: f(x) = 1/2 x^T Q x + g^T x + h with Q symmetric positive
// definite.  Minimizer x* = -Q^{-1} g, f* = f(x*).
// ---------------------------------------------------------------------------

template <typename Scalar = double>
struct QuadraticProblem {
  Matrix<Scalar> Q;
  Vector<Scalar> g;
  Scalar h = 0;

  // Derived at construction.
  Vector<Scalar> eigenvalues;  // non-decreasing
  Matrix<Scalar> U;            // orthogonal eigenbasis
  Vector<Scalar> xstar;
  Scalar fstar = 0;

  QuadraticProblem(Matrix<Scalar> Q_in, Vector<Scalar> g_in, Scalar h_in = 0)
      : Q(std::move(Q_in)), g(std::move(g_in)), h(h_in) {
    if (Q.rows() != Q.cols()) throw ValidationError("quadratic: Q not square");
    if (g.size() != Q.rows())
      throw ValidationError("quadratic: g dimension mismatch");
    SpectralDecomposition<Scalar> sd = eig_sym<Scalar>(Q);
    eigenvalues = std::move(sd.eigenvalues);
    U = std::move(sd.basis);
    if (eigenvalues(0) <= Scalar(0))
      throw ValidationError("quadratic: Q must be positive definite");
    // x* = -Q^{-1} g via the decomposition.
    xstar = -(U * (U.transpose() * g).cwiseQuotient(eigenvalues).matrix());
    fstar = value(xstar);
  }

  static QuadraticProblem from_eigenvalues(const Vector<Scalar>& evals) {
    if (evals.size() == 0)
      throw ValidationError("quadratic: empty eigenvalue list");
    Matrix<Scalar> Q = evals.asDiagonal();
    return QuadraticProblem(Q, Vector<Scalar>::Zero(evals.size()));
  }

  Eigen::Index dim() const { return Q.rows(); }
  Scalar mu() const { return eigenvalues(0); }
  Scalar L() const { return eigenvalues(eigenvalues.size() - 1); }

  Scalar value(const Vector<Scalar>& x) const {
    return Scalar(0.5) * x.dot(Q * x) + g.dot(x) + h;
  }
  Scalar suboptimality(const Vector<Scalar>& x) const {
    return value(x) - fstar;
  }
  Vector<Scalar> gradient(const Vector<Scalar>& x) const { return Q * x + g; }
};

// ---------------------------------------------------------------------------
// Huber regression with ridge term:
//   f(x) = sum_i huber_lambda(a_i^T x - b_i) + mu/2 ||x||^2,
// where a_i are the columns of the d x p data matrix A.  The Hessian obeys
// mu I <= Hess f <= (||A||^2 + mu) I, so scaling A to ||A|| = sqrt(L - mu)
// pins the smoothness constant to L.
// ---------------------------------------------------------------------------

template <typename Scalar = double>
Scalar huber_value(Scalar r, Scalar lambda) {
  const Scalar a = std::abs(r);
  return a <= lambda ? Scalar(0.5) * r * r
                     : lambda * a - Scalar(0.5) * lambda * lambda;
}

template <typename Scalar = double>
Scalar huber_derivative(Scalar r, Scalar lambda) {
  if (r > lambda) return lambda;
  if (r < -lambda) return -lambda;
  return r;
}

template <typename Scalar = double>
struct HuberProblem {
  Matrix<Scalar> A;  // d x p, columns are data points a_i
  Vector<Scalar> b;  // p
  Scalar lambda = Scalar(0.1);
  Scalar mu_reg = Scalar(0.005);

  Vector<Scalar> xstar;
  Scalar fstar = 0;
  Scalar L_smooth = 0;

  HuberProblem(Matrix<Scalar> A_in, Vector<Scalar> b_in, Scalar lambda_in,
               Scalar mu_in)
      : A(std::move(A_in)), b(std::move(b_in)), lambda(lambda_in),
        mu_reg(mu_in) {
    if (b.size() != A.cols())
      throw ValidationError("huber: b length must match number of columns");
    if (lambda <= Scalar(0)) throw ValidationError("huber: lambda must be > 0");
    if (mu_reg <= Scalar(0)) throw ValidationError("huber: mu must be > 0");
    L_smooth = spectral_norm_squared(A) + mu_reg;
    solve_for_minimizer();
  }

  // Random instance: A has iid N(0,1) entries rescaled so that the spectral
  // norm is sqrt(L - mu); b is iid Uniform[-1, 1].
  static HuberProblem generate(Eigen::Index d, Eigen::Index p, Scalar mu,
                               Scalar L, Scalar lambda, std::uint64_t seed) {
    if (d <= 0 || p <= 0) throw ValidationError("huber: d, p must be > 0");
    if (!(L > mu)) throw ValidationError("huber: need L > mu");
    CounterRng rng(seed, /*path=*/0);
    Matrix<Scalar> A(d, p);
    for (Eigen::Index j = 0; j < p; ++j)
      for (Eigen::Index i = 0; i < d; ++i) A(i, j) = rng.gaussian();
    const Scalar norm = std::sqrt(spectral_norm_squared(A));
    A *= std::sqrt(L - mu) / norm;
    Vector<Scalar> b(p);
    for (Eigen::Index i = 0; i < p; ++i)
      b(i) = Scalar(2) * Scalar(rng.uniform01()) - Scalar(1);
    return HuberProblem(std::move(A), std::move(b), lambda, mu);
  }

  Eigen::Index dim() const { return A.rows(); }
  Eigen::Index num_points() const { return A.cols(); }
  Scalar mu() const { return mu_reg; }
  Scalar L() const { return L_smooth; }

  Scalar value(const Vector<Scalar>& x) const {
    const Vector<Scalar> r = A.transpose() * x - b;
    Scalar s = 0;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      s += huber_value(r(i), lambda);
    return s + Scalar(0.5) * mu_reg * x.squaredNorm();
  }
  Scalar suboptimality(const Vector<Scalar>& x) const {
    return value(x) - fstar;
  }

  // Suboptimality of every column of X at once; one GEMM instead of a
  // residual pass per candidate.
  void suboptimality_batch(const Matrix<Scalar>& X,
                           Vector<Scalar>& out) const {
    Matrix<Scalar> R = A.transpose() * X;
    R.colwise() -= b;
    out.resize(X.cols());
    for (Eigen::Index j = 0; j < R.cols(); ++j) {
      Scalar s = 0;
      for (Eigen::Index i = 0; i < R.rows(); ++i)
        s += huber_value(R(i, j), lambda);
      out(j) = s + Scalar(0.5) * mu_reg * X.col(j).squaredNorm() - fstar;
    }
  }

  Vector<Scalar> gradient(const Vector<Scalar>& x) const {
    Vector<Scalar> r = A.transpose() * x - b;
    for (Eigen::Index i = 0; i < r.size(); ++i)
      r(i) = huber_derivative(r(i), lambda);
    return A * r + mu_reg * x;
  }

  // Unbiased minibatch estimate: sample `batch` indices uniformly with
  // replacement and rescale by p / batch.
  Vector<Scalar> minibatch_gradient(const Vector<Scalar>& x,
                                    Eigen::Index batch,
                                    CounterRng& rng) const {
    if (batch <= 0) throw ValidationError("huber: batch must be > 0");
    Vector<Scalar> out = Vector<Scalar>::Zero(dim());
    const std::uint64_t p = static_cast<std::uint64_t>(num_points());
    for (Eigen::Index t = 0; t < batch; ++t) {
      const Eigen::Index i = static_cast<Eigen::Index>(rng.below(p));
      const Scalar r = A.col(i).dot(x) - b(i);
      out += huber_derivative(r, lambda) * A.col(i);
    }
    out *= Scalar(num_points()) / Scalar(batch);
    out += mu_reg * x;
    return out;
  }

  static Scalar spectral_norm_squared(const Matrix<Scalar>& M) {
    const Matrix<Scalar> G = M * M.transpose();
    SpectralDecomposition<Scalar> sd = eig_sym<Scalar>(G);
    return sd.eigenvalues(sd.eigenvalues.size() - 1);
  }

 private:
  // Damped Newton with LDLT solves and backtracking; falls back to a gradient
  // step whenever the Newton direction fails to descend.  The Hessian is
  // d x d with d small, so each iteration is cheap next to the residual pass.
  void solve_for_minimizer() {
    const Eigen::Index d = dim();
    Vector<Scalar> x = Vector<Scalar>::Zero(d);
    const Scalar grad_tol = Scalar(1e-11);
    for (int iter = 0; iter < 500; ++iter) {
      const Vector<Scalar> r = A.transpose() * x - b;
      Vector<Scalar> phi(r.size());
      Matrix<Scalar> H = mu_reg * Matrix<Scalar>::Identity(d, d);
      for (Eigen::Index i = 0; i < r.size(); ++i) {
        phi(i) = huber_derivative(r(i), lambda);
        if (std::abs(r(i)) <= lambda)
          H.noalias() += A.col(i) * A.col(i).transpose();
      }
      const Vector<Scalar> grad = A * phi + mu_reg * x;
      if (grad.norm() <= grad_tol) break;
      Vector<Scalar> step = -Eigen::LDLT<Matrix<Scalar>>(H).solve(grad);
      if (!(step.dot(grad) < Scalar(0))) step = -grad / L_smooth;
      const Scalar f0 = value(x);
      const Scalar slope = grad.dot(step);
      Scalar t = Scalar(1);
      for (int ls = 0; ls < 60; ++ls) {
        if (value(x + t * step) <= f0 + Scalar(1e-4) * t * slope) break;
        t *= Scalar(0.5);
      }
      x += t * step;
    }
    const Vector<Scalar> grad_final = gradient(x);
    if (grad_final.norm() > Scalar(1e-8))
      throw NumericalError("huber: Newton solve did not reach tolerance");
    xstar = std::move(x);
    fstar = value(xstar);
  }
};

}  // namespace rsopt
