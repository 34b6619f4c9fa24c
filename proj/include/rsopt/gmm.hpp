#pragma once

// Generalized momentum method (GMM) parameterization, the named presets from
// the classical literature, and the per-eigenvalue 2x2 state-space blocks
// that drive every spectral computation downstream.
//
// Iteration, with x_{-1} = x_0:
//   y_k     = x_k + nu (x_k - x_{k-1})
//   x_{k+1} = x_k - alpha \tilde\nabla f(y_k) + beta (x_k - x_{k-1})
// GD: beta = nu = 0.  Heavy ball: nu = 0.  Nesterov: beta = nu.

#include <cmath>
#include <string>

#include "rsopt/types.hpp"

namespace rsopt {

struct GmmParams {
  double alpha = 0;
  double beta = 0;
  double nu = 0;

  void validate() const {
    if (!(std::isfinite(alpha) && std::isfinite(beta) && std::isfinite(nu)))
      throw ValidationError("gmm: parameters must be finite");
    if (!(alpha > 0)) throw ValidationError("gmm: alpha must be > 0");
  }
};

// One step of the iteration given the gradient evaluated at the query point.
template <typename Scalar>
Vector<Scalar> gmm_query_point(const GmmParams& p, const Vector<Scalar>& x,
                               const Vector<Scalar>& x_prev) {
  return x + p.nu * (x - x_prev);
}

template <typename Scalar>
Vector<Scalar> gmm_advance(const GmmParams& p, const Vector<Scalar>& x,
                           const Vector<Scalar>& x_prev,
                           const Vector<Scalar>& grad_at_y) {
  return x - p.alpha * grad_at_y + p.beta * (x - x_prev);
}

// ---------------------------------------------------------------------------
// Modal 2x2 blocks.  On each eigenspace of Q, the deviation from x* follows
//   xi_{k+1} = [[ -b, -c ], [ 1, 0 ]] xi_k + [-alpha; 0] w,
// with b = alpha lambda (1 + nu) - (1 + beta) and c = beta - alpha nu lambda.
// ---------------------------------------------------------------------------

inline double modal_b(const GmmParams& p, double lambda) {
  return p.alpha * lambda * (1.0 + p.nu) - (1.0 + p.beta);
}

inline double modal_c(const GmmParams& p, double lambda) {
  return p.beta - p.alpha * p.nu * lambda;
}

inline Matrix2 modal_block(const GmmParams& p, double lambda) {
  Matrix2 A;
  A << -modal_b(p, lambda), -modal_c(p, lambda), 1.0, 0.0;
  return A;
}

// Spectral radius of the companion matrix with characteristic polynomial
// z^2 + b z + c, computed from the closed-form roots.
inline double companion_radius(double b, double c) {
  const double disc = b * b - 4.0 * c;
  if (disc >= 0.0) {
    const double sd = std::sqrt(disc);
    return std::max(std::abs(-b + sd), std::abs(-b - sd)) / 2.0;
  }
  return std::sqrt(c);  // complex pair; c > 0 whenever disc < 0
}

inline double modal_radius(const GmmParams& p, double lambda) {
  return companion_radius(modal_b(p, lambda), modal_c(p, lambda));
}

// Worst-case linear convergence rate on a quadratic with spectrum `evals`.
template <typename Derived>
double quadratic_rate(const GmmParams& p, const Eigen::MatrixBase<Derived>& evals) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    r = std::max(r, modal_radius(p, evals(i)));
  return r;
}

// ---------------------------------------------------------------------------
// Full 2d x 2d state-space realization on a quadratic with Hessian Q:
//   xi = [x_k - x*; x_{k-1} - x*],  xi_{k+1} = A_Q xi_k + B w_{k+1},
// and the output weight Qbar = [[Q/2, 0], [0, 0]] so that
// xi^T Qbar xi = f(x_k) - f*.
// ---------------------------------------------------------------------------

template <typename Scalar>
Matrix<Scalar> build_full_A(const GmmParams& p, const Matrix<Scalar>& Q) {
  const Eigen::Index d = Q.rows();
  const Matrix<Scalar> I = Matrix<Scalar>::Identity(d, d);
  Matrix<Scalar> A = Matrix<Scalar>::Zero(2 * d, 2 * d);
  A.topLeftCorner(d, d) = (1.0 + p.beta) * I - p.alpha * (1.0 + p.nu) * Q;
  A.topRightCorner(d, d) = -p.beta * I + p.alpha * p.nu * Q;
  A.bottomLeftCorner(d, d) = I;
  return A;
}

template <typename Scalar>
Matrix<Scalar> build_full_B(const GmmParams& p, Eigen::Index d) {
  Matrix<Scalar> B = Matrix<Scalar>::Zero(2 * d, d);
  B.topLeftCorner(d, d) = -p.alpha * Matrix<Scalar>::Identity(d, d);
  return B;
}

template <typename Scalar>
Matrix<Scalar> build_Qbar(const Matrix<Scalar>& Q) {
  const Eigen::Index d = Q.rows();
  Matrix<Scalar> Qb = Matrix<Scalar>::Zero(2 * d, 2 * d);
  Qb.topLeftCorner(d, d) = Q / 2.0;
  return Qb;
}

// ---------------------------------------------------------------------------
// Named presets (step sizes / momenta as functions of mu and L) together with
// the guaranteed convergence rate each carries.
// ---------------------------------------------------------------------------

enum class PresetId {
  GdPop,       // alpha = 1/L
  GdFastest,   // alpha = 2/(L+mu)
  RsGd,        // alpha = 2/(L+sqrt(L mu))
  NagPop,      // alpha = 1/L, beta = nu = (1-1/sqrt(k))/(1+1/sqrt(k))
  NagFastest,  // alpha = 4/(3L+mu)
  NagBetaOpt,  // alpha in (0, 1/L], beta = nu = (1-sqrt(alpha mu))/(1+sqrt(alpha mu))
  Tmm,         // triple momentum
  Hb,          // heavy ball, alpha = 4/(sqrt(L)+sqrt(mu))^2
  RsHb,        // heavy ball, alpha = a^2/L, beta = (1 - a/sqrt(k))^2
};

struct ResolvedPreset {
  GmmParams params;
  double rate = 0;  // guaranteed rho from the literature
  std::string name;
};

struct PresetOptions {
  double alpha = -1.0;      // nag-beta-opt step size; <= 0 means default 1/L
  double rs_hb_a = std::sqrt(2.0);  // rs-hb tuning constant a(kappa)
};

inline PresetId parse_preset(const std::string& s) {
  if (s == "gd-pop") return PresetId::GdPop;
  if (s == "gd-fastest") return PresetId::GdFastest;
  if (s == "rs-gd") return PresetId::RsGd;
  if (s == "nag-pop") return PresetId::NagPop;
  if (s == "nag-fastest") return PresetId::NagFastest;
  if (s == "nag-beta-opt") return PresetId::NagBetaOpt;
  if (s == "tmm") return PresetId::Tmm;
  if (s == "hb") return PresetId::Hb;
  if (s == "rs-hb") return PresetId::RsHb;
  throw ValidationError("unknown preset: " + s);
}

inline const char* preset_name(PresetId id) {
  switch (id) {
    case PresetId::GdPop: return "gd-pop";
    case PresetId::GdFastest: return "gd-fastest";
    case PresetId::RsGd: return "rs-gd";
    case PresetId::NagPop: return "nag-pop";
    case PresetId::NagFastest: return "nag-fastest";
    case PresetId::NagBetaOpt: return "nag-beta-opt";
    case PresetId::Tmm: return "tmm";
    case PresetId::Hb: return "hb";
    case PresetId::RsHb: return "rs-hb";
  }
  throw ValidationError("unknown preset id");
}

inline ResolvedPreset resolve_preset(PresetId id, double mu, double L,
                                     const PresetOptions& opt = {}) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("preset: need 0 < mu <= L");
  const double kappa = L / mu;
  const double rk = std::sqrt(kappa);
  ResolvedPreset out;
  out.name = preset_name(id);
  GmmParams& p = out.params;
  switch (id) {
    case PresetId::GdPop:
      p = {1.0 / L, 0.0, 0.0};
      out.rate = 1.0 - 1.0 / kappa;
      break;
    case PresetId::GdFastest:
      p = {2.0 / (L + mu), 0.0, 0.0};
      out.rate = 1.0 - 2.0 / (kappa + 1.0);
      break;
    case PresetId::RsGd:
      p = {2.0 / (L + std::sqrt(L * mu)), 0.0, 0.0};
      out.rate = 1.0 - 2.0 / (kappa + rk);
      break;
    case PresetId::NagPop: {
      const double beta = (1.0 - 1.0 / rk) / (1.0 + 1.0 / rk);
      p = {1.0 / L, beta, beta};
      out.rate = 1.0 - 1.0 / rk;
      break;
    }
    case PresetId::NagFastest: {
      const double s = std::sqrt(3.0 * kappa + 1.0);
      const double beta = (s - 2.0) / (s + 2.0);
      p = {4.0 / (3.0 * L + mu), beta, beta};
      out.rate = 1.0 - 2.0 / s;
      break;
    }
    case PresetId::NagBetaOpt: {
      const double alpha = opt.alpha > 0 ? opt.alpha : 1.0 / L;
      if (alpha > 1.0 / L + 1e-15)
        throw ValidationError("nag-beta-opt: alpha must lie in (0, 1/L]");
      const double sam = std::sqrt(alpha * mu);
      p = {alpha, (1.0 - sam) / (1.0 + sam), (1.0 - sam) / (1.0 + sam)};
      out.rate = 1.0 - sam;
      break;
    }
    case PresetId::Tmm: {
      const double rho = 1.0 - 1.0 / rk;
      p.alpha = (1.0 + rho) / L;
      p.beta = rho * rho / (2.0 - rho);
      p.nu = rho * rho / ((1.0 + rho) * (2.0 - rho));
      out.rate = rho;
      break;
    }
    case PresetId::Hb: {
      const double s = std::sqrt(L) + std::sqrt(mu);
      p.alpha = 4.0 / (s * s);
      p.beta = sq((rk - 1.0) / (rk + 1.0));
      p.nu = 0.0;
      out.rate = 1.0 - 2.0 / (rk + 1.0);
      break;
    }
    case PresetId::RsHb: {
      const double a = opt.rs_hb_a;
      if (!(a > 0) || !(a < rk))
        throw ValidationError("rs-hb: need 0 < a < sqrt(kappa)");
      p.alpha = a * a / L;
      p.beta = sq(1.0 - a / rk);
      p.nu = 0.0;
      out.rate = 1.0 - a / rk;
      break;
    }
  }
  p.validate();
  return out;
}

}  // namespace rsopt
