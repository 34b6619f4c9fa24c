#pragma once

// Strongly convex (non-quadratic) machinery: matrix-inequality certificates
// and the H-bar-infinity constant they induce, the finite-time risk bound
// R_bar_K(theta), its asymptotic limit, the variational tail dual Psi, and
// the finite-K / asymptotic large-deviation exponents.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "rsopt/gmm.hpp"
#include "rsopt/jacobi.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

// ---------------------------------------------------------------------------
// Certificates.
// ---------------------------------------------------------------------------

struct MiCertificate {
  double rho0 = 0, rho1 = 0, rho2 = 0, rho3 = 0;  // each in [0, 1)
  double a = 0, b = 0, c0 = 0, c1 = 0;            // each >= 0
  Matrix2 P_tilde = Matrix2::Zero();
};

// Schur-type residue r~(P): P11 - P12^2/P22, read as P11 when P22 = 0.
inline double r_tilde_of(const Matrix2& P) {
  if (P(1, 1) != 0.0) return P(0, 0) - P(0, 1) * P(1, 0) / P(1, 1);
  return P(0, 0);
}

struct MiMatrices {
  Matrix<double> M0, M1, M2;  // 4x4, coordinates (xi_1, xi_2, g, w)
};

// Assembles the three certificate matrices whose combination
// M2 + c1 M1 + c0 M0 must be PSD for the decay inequality to hold.  The
// state-space blocks here are the parameter-level A~ = [[1+beta, -beta],
// [1, 0]], B~ = (-alpha, 0)^T, C~ = [1+nu, -nu].
inline MiMatrices build_mi_matrices(const GmmParams& p, double mu, double L,
                                    const MiCertificate& cert) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("mi matrices: need 0 < mu <= L");
  p.validate();
  const double alpha = p.alpha, beta = p.beta, nu = p.nu;
  Matrix2 A;
  A << 1.0 + beta, -beta, 1.0, 0.0;
  Vector2 B;
  B << -alpha, 0.0;
  Eigen::RowVector2d C;
  C << 1.0 + nu, -nu;

  MiMatrices out;
  out.M0 = Matrix<double>::Zero(4, 4);
  out.M1 = Matrix<double>::Zero(4, 4);
  out.M2 = Matrix<double>::Zero(4, 4);

  // M0: the (scaled) co-coercivity form in (xi, g); w is untouched.
  out.M0.topLeftCorner(2, 2) = 2.0 * mu * L * C.transpose() * C;
  out.M0.block<2, 1>(0, 2) = -(mu + L) * C.transpose();
  out.M0.block<1, 2>(2, 0) = -(mu + L) * C;
  out.M0(2, 2) = 2.0;

  // M1: top-left 3x3 is X~ + Z~; the w column couples through M3 = [1, -1].
  const double D = beta - nu;  // Delta~
  Matrix<double> X1(3, 3), X2(3, 3), X3(3, 3);
  X1 << -L * D * D, L * D * D, -(1.0 - alpha * L) * D,
        L * D * D, -L * D * D, (1.0 - L * alpha) * D,
        -(1.0 - alpha * L) * D, (1.0 - L * alpha) * D,
        alpha * (2.0 - L * alpha);
  X1 *= 0.5;
  X2 << nu * nu * mu, -nu * nu * mu, -nu,
        -nu * nu * mu, nu * nu * mu, nu,
        -nu, nu, 0.0;
  X2 *= 0.5;
  X3 << sq(1.0 + nu) * mu, -nu * (1.0 + nu) * mu, -(1.0 + nu),
        -nu * (1.0 + nu) * mu, nu * nu * mu, nu,
        -(1.0 + nu), nu, 0.0;
  X3 *= 0.5;
  const double r02 = sq(cert.rho0);
  Matrix<double> X = X1 + r02 * X2 + (1.0 - r02) * X3;
  const Matrix2& P = cert.P_tilde;
  Matrix<double> Z = Matrix<double>::Zero(3, 3);
  Z(0, 0) = sq(cert.rho1) * P(0, 0) + mu * sq(cert.rho2) / 2.0;
  Z(0, 1) = Z(1, 0) = sq(cert.rho1) * P(0, 1);
  Z(1, 1) = sq(cert.rho1) * P(1, 1) + mu * sq(cert.rho3) / 2.0;
  out.M1.topLeftCorner(3, 3) = X + Z;
  Eigen::Vector3d col;
  col << L * alpha * D / 2.0, -L * alpha * D / 2.0,
      alpha * (1.0 - L * alpha) / 2.0;
  out.M1.block<3, 1>(0, 3) = col;
  out.M1.block<1, 3>(3, 0) = col.transpose();

  // M2(P, a).
  out.M2.topLeftCorner(2, 2) = -A.transpose() * P * A + r02 * P;
  const Vector2 AtPB = A.transpose() * P * B;
  out.M2.block<2, 1>(0, 2) = -AtPB;
  out.M2.block<2, 1>(0, 3) = -AtPB;
  out.M2.block<1, 2>(2, 0) = -AtPB.transpose();
  out.M2.block<1, 2>(3, 0) = -AtPB.transpose();
  const double BtPB = B.dot(P * B);
  out.M2(2, 2) = -BtPB + cert.b * cert.c1;
  out.M2(2, 3) = out.M2(3, 2) = -BtPB;
  out.M2(3, 3) = cert.a;
  return out;
}

inline Matrix<double> mi_combination(const GmmParams& p, double mu, double L,
                                     const MiCertificate& cert) {
  const MiMatrices m = build_mi_matrices(p, mu, L, cert);
  return m.M2 + cert.c1 * m.M1 + cert.c0 * m.M0;
}

inline double mi_min_eigenvalue(const GmmParams& p, double mu, double L,
                                const MiCertificate& cert) {
  const Matrix<double> M = mi_combination(p, mu, L, cert);
  return eig_sym<double>((M + M.transpose()) / 2.0).eigenvalues(0);
}

// ---------------------------------------------------------------------------
// Decay coefficients and H-bar-infinity.
// ---------------------------------------------------------------------------

struct BoundCoefficients {
  double p = 0, q = 0, r = 0;
  double lambda_plus = 0;  // (p + sqrt(p^2 + 4q))/2
  double J_pq = 1;         // 1/(1 + lambda_plus - p)
  double H_bar_inf = 0;
  double c1 = 0;
  double r_tilde = 0;
  double V0 = 0;  // V(xi_0); set via with_initial_state
  Matrix2 P_tilde = Matrix2::Zero();
  std::string provenance = "custom";
};

namespace detail {

inline void finalize_coefficients(BoundCoefficients& bc, double L) {
  if (!(bc.p >= 0) || !(bc.q >= 0) || !(bc.p + bc.q < 1.0))
    throw ValidationError("certificate: p + q must lie in [0, 1)");
  const double c = bc.c1 + 2.0 / L * bc.r_tilde;
  if (!(c > 0))
    throw ValidationError("certificate: c1 + (2/L) r~(P) must be > 0");
  if (!(bc.c1 + bc.P_tilde(0, 0) > 0))
    throw ValidationError("certificate: c1 + P11 must be > 0");
  bc.lambda_plus = (bc.p + std::sqrt(bc.p * bc.p + 4.0 * bc.q)) / 2.0;
  bc.J_pq = 1.0 / (1.0 + bc.lambda_plus - bc.p);
  bc.H_bar_inf = std::sqrt(bc.r / ((1.0 - (bc.p + bc.q)) * c));
}

}  // namespace detail

// A valid certificate yields the two-step Lyapunov decay
//   V(xi_{k+1}) <= p V(xi_k) + q V(xi_{k-1}) + r ||w_{k+1}||^2.
inline BoundCoefficients decay_from_certificate(const GmmParams& params,
                                                double mu, double L,
                                                const MiCertificate& cert,
                                                std::string provenance =
                                                    "custom") {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("certificate: need 0 < mu <= L");
  params.validate();
  BoundCoefficients bc;
  bc.c1 = cert.c1;
  bc.P_tilde = cert.P_tilde;
  bc.r_tilde = r_tilde_of(cert.P_tilde);
  bc.provenance = std::move(provenance);
  const double nu = params.nu;
  bc.p = sq(cert.rho0) + cert.c1 * sq(cert.rho1) + sq(cert.rho2) +
         4.0 * cert.b * sq(1.0 + nu) * L * L / mu * cert.c1;
  bc.q = sq(cert.rho3) + 4.0 * cert.b * nu * nu * L * L / mu * cert.c1;
  bc.r = cert.a +
         sq(params.alpha) * (cert.c1 * L / 2.0 + cert.P_tilde(0, 0));
  detail::finalize_coefficients(bc, L);
  return bc;
}

enum class GdVariant { Distance, Function };

// GD certificates in closed form.  Distance variant: one-step contraction
// of ||x - x*||^2 (P = diag(1, 0), c1 = 0); function variant: descent of
// f - f* (P = 0, c1 = 1).
inline BoundCoefficients certificate_gd(double alpha, double mu, double L,
                                        GdVariant variant) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("certificate_gd: need 0 < mu <= L");
  if (!(alpha > 0) || !(alpha < 2.0 / L))
    throw ValidationError("certificate_gd: alpha must lie in (0, 2/L)");
  BoundCoefficients bc;
  if (variant == GdVariant::Distance) {
    const double rho = std::max(std::abs(1.0 - alpha * mu),
                                std::abs(1.0 - alpha * L));
    bc.p = rho;
    bc.q = 0;
    bc.r = alpha * alpha / (1.0 - rho);
    bc.c1 = 0;
    bc.P_tilde << 1.0, 0.0, 0.0, 0.0;
    bc.provenance = "gd-distance";
  } else {
    const double s_gd = alpha <= 1.0 / L ? 1.0
                                         : (2.0 - alpha * L) / (alpha * L);
    const double dev = std::abs(1.0 - alpha * L);
    bc.p = 1.0 - 2.0 * mu * alpha * (1.0 - L * alpha / 2.0) +
           alpha * mu * dev * s_gd;
    bc.q = 0;
    bc.r = alpha * (L * alpha / 2.0 + dev / (2.0 * s_gd));
    bc.c1 = 1;
    bc.P_tilde.setZero();
    bc.provenance = "gd-function";
  }
  bc.r_tilde = r_tilde_of(bc.P_tilde);
  detail::finalize_coefficients(bc, L);
  return bc;
}

// Piecewise closed form in alpha; equals the better of the two variants.
inline double h_bar_inf_gd_table(double alpha, double mu, double L) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("gd table: need 0 < mu <= L");
  if (!(alpha > 0) || !(alpha < 2.0 / L))
    throw ValidationError("gd table: alpha must lie in (0, 2/L)");
  if (alpha <= 1.0 / L) return 1.0 / std::sqrt(2.0 * mu);
  if (alpha <= 2.0 / (L + std::sqrt(L * mu)))
    return alpha * L / ((2.0 - alpha * L) * std::sqrt(2.0 * mu));
  if (alpha <= 2.0 / (L + mu)) return std::sqrt(L / mu) / std::sqrt(2.0 * mu);
  return alpha * std::sqrt(L) / (std::sqrt(2.0) * (2.0 - alpha * L));
}

// NAG certificate (beta = nu = (1 - sqrt(alpha mu))/(1 + sqrt(alpha mu))).
inline BoundCoefficients certificate_nag(double alpha, double mu, double L) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("certificate_nag: need 0 < mu <= L");
  if (!(alpha > 0) || alpha > 1.0 / L * (1.0 + 1e-15))
    throw ValidationError("certificate_nag: alpha must lie in (0, 1/L]");
  const double s = std::sqrt(alpha * mu);
  const double ra = std::sqrt(alpha);
  const double onps2 = sq(1.0 + s);
  const double beta = (1.0 - s) / (1.0 + s);
  const double s1 = 2.0 * (5.0 - 2.0 * s + s * s) / (std::sqrt(mu) * onps2);
  const double s2 = 8.0 * L * L * L * alpha / (mu * std::sqrt(mu) * onps2) *
                    (4.0 + sq(1.0 - s));
  BoundCoefficients bc;
  bc.p = (1.0 - s) + 8.0 * alpha * ra * L * L * L / (mu * onps2 * s2) +
         ra * (4.0 - s + s * s) / (2.0 * s1 * onps2);
  bc.q = ra * (1.0 - s) / (2.0 * s1 * onps2) +
         2.0 * alpha * ra * L * L * L * beta * beta / (s2 * mu);
  bc.r = alpha * (1.0 + alpha * L) / 2.0 + ra * s1 +
         alpha * alpha * ra * L / 2.0 * s2;
  bc.c1 = 1;
  Vector2 v;
  v << 1.0, -(1.0 - s);
  bc.P_tilde = v * v.transpose() / (2.0 * alpha);
  bc.r_tilde = r_tilde_of(bc.P_tilde);  // rank-1: exactly 0
  bc.provenance = "nag";
  detail::finalize_coefficients(bc, L);
  // Hand-expanded closed form of the same constant; equal to the generic
  // r/((1-p-q)c) value, kept as the reported constant.
  bc.H_bar_inf = std::sqrt(
      4.0 * (5.0 - 2.0 * s + s * s) / (mu * onps2) +
      ra * (1.0 + alpha * L) / std::sqrt(mu) +
      8.0 * alpha * alpha * alpha * sq(L * L) * (4.0 + sq(1.0 - s)) /
          (mu * mu * onps2));
  return bc;
}

// ---------------------------------------------------------------------------
// Completions of the GD/NAG certificates into full matrix-inequality
// witnesses.  The analytic pieces (rho0, rho3, a, b) are fixed by the same
// derivations that produce the decay coefficients; the remaining split and
// the S-procedure weight c0 are found numerically by maximizing the minimum
// eigenvalue, which is concave in these parameters.
// ---------------------------------------------------------------------------

namespace detail {

// Maximize a concave f on [lo, hi]; returns (argmax, max).
template <typename F>
std::pair<double, double> golden_max_point(F&& f, double lo, double hi,
                                           int iters = 90) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = hi - invphi * (hi - lo);
  double x2 = lo + invphi * (hi - lo);
  double f1 = f(x1), f2 = f(x2);
  for (int i = 0; i < iters; ++i) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + invphi * (hi - lo);
      f2 = f(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - invphi * (hi - lo);
      f1 = f(x1);
    }
  }
  return f1 >= f2 ? std::make_pair(x1, f1) : std::make_pair(x2, f2);
}

// Maximize concave f over [0, inf): golden on [0, H], growing H while the
// argmax presses against the right edge.
template <typename F>
std::pair<double, double> golden_max_ray(F&& f, double h0 = 1.0) {
  double H = h0;
  for (int round = 0; round < 40; ++round) {
    auto [x, v] = golden_max_point(f, 0.0, H);
    if (x < 0.9 * H || H > 1e9) return {x, v};
    H *= 4.0;
  }
  return golden_max_point(f, 0.0, H);
}

}  // namespace detail

inline MiCertificate mi_certificate_gd(double alpha, double mu, double L,
                                       GdVariant variant) {
  const BoundCoefficients bc = certificate_gd(alpha, mu, L, variant);
  MiCertificate cert;
  cert.rho0 = std::sqrt(bc.p);
  cert.c1 = bc.c1;
  cert.P_tilde = bc.P_tilde;
  cert.b = 0;
  // r = a + alpha^2 (c1 L/2 + P11)  =>  a is pinned by the corollary's r.
  cert.a = bc.r - alpha * alpha * (bc.c1 * L / 2.0 + bc.P_tilde(0, 0));
  GmmParams params{alpha, 0.0, 0.0};
  auto [c0, v] = detail::golden_max_ray([&](double c0_try) {
    MiCertificate c = cert;
    c.c0 = c0_try;
    return mi_min_eigenvalue(params, mu, L, c);
  });
  (void)v;
  cert.c0 = c0;
  return cert;
}

inline MiCertificate mi_certificate_nag(double alpha, double mu, double L) {
  const BoundCoefficients bc = certificate_nag(alpha, mu, L);
  const double s = std::sqrt(alpha * mu);
  const double ra = std::sqrt(alpha);
  const double onps2 = sq(1.0 + s);
  const double s1 = 2.0 * (5.0 - 2.0 * s + s * s) / (std::sqrt(mu) * onps2);
  const double s2 = 8.0 * L * L * L * alpha / (mu * std::sqrt(mu) * onps2) *
                    (4.0 + sq(1.0 - s));
  const double beta = (1.0 - s) / (1.0 + s);
  GmmParams params{alpha, beta, beta};

  MiCertificate cert;
  cert.c1 = 1;
  cert.P_tilde = bc.P_tilde;
  // b reproduces the L^3 terms of p and q exactly (1 + nu = 2/(1+s)).
  cert.b = alpha * ra * L / (2.0 * s2);
  cert.a = ra * (s1 + alpha * alpha * L * s2 / 2.0);
  const double q_b = 4.0 * cert.b * beta * beta * L * L / mu;
  cert.rho3 = std::sqrt(std::max(0.0, bc.q - q_b));
  // Remaining budget rho0^2 + rho1^2 + rho2^2; rho0^2 keeps the corollary's
  // rho_NAG^2 = 1 - sqrt(alpha mu) and the rest is split by a 1-D search.
  const double p_b = 4.0 * cert.b * sq(1.0 + beta) * L * L / mu;
  const double rem = bc.p - p_b - (1.0 - s);
  cert.rho0 = std::sqrt(1.0 - s);
  double t = 0.5, c0 = 0.0;
  auto min_eig = [&](double t_try, double c0_try) {
    MiCertificate c = cert;
    c.rho1 = std::sqrt(std::max(0.0, t_try * rem));
    c.rho2 = std::sqrt(std::max(0.0, (1.0 - t_try) * rem));
    c.c0 = c0_try;
    return mi_min_eigenvalue(params, mu, L, c);
  };
  for (int round = 0; round < 8; ++round) {
    t = detail::golden_max_point([&](double tt) { return min_eig(tt, c0); },
                                 0.0, 1.0)
            .first;
    c0 = detail::golden_max_ray([&](double cc) { return min_eig(t, cc); },
                                std::max(1.0, c0 * 2.0))
             .first;
  }
  cert.rho1 = std::sqrt(std::max(0.0, t * rem));
  cert.rho2 = std::sqrt(std::max(0.0, (1.0 - t) * rem));
  cert.c0 = c0;
  return cert;
}

// ---------------------------------------------------------------------------
// Lyapunov evaluation V_{P,c1}(xi) = c1 (f(x) - f*) + xi^T (P (x) I) xi with
// xi = (x - x*; x_prev - x*).
// ---------------------------------------------------------------------------

template <typename Problem>
double lyapunov_value(const BoundCoefficients& bc, const Problem& prob,
                      const Vector<double>& x, const Vector<double>& x_prev) {
  const Vector<double> e = x - prob.xstar;
  const Vector<double> ep = x_prev - prob.xstar;
  return bc.c1 * (prob.value(x) - prob.fstar) +
         bc.P_tilde(0, 0) * e.squaredNorm() +
         2.0 * bc.P_tilde(0, 1) * e.dot(ep) +
         bc.P_tilde(1, 1) * ep.squaredNorm();
}

// x_{-1} = x_0 convention: xi_0 = (x_0; x_0).
template <typename Problem>
BoundCoefficients with_initial_state(BoundCoefficients bc,
                                     const Problem& prob,
                                     const Vector<double>& x0) {
  bc.V0 = lyapunov_value(bc, prob, x0, x0);
  return bc;
}

// ---------------------------------------------------------------------------
// Unrolled two-step recurrence weights.
// ---------------------------------------------------------------------------

struct Recurrence {
  std::vector<double> a;  // a_{k,K}, k = 0..K
  std::vector<double> b;  // b_{k,K} = (lambda_plus - p) a_{k,K}
  double lambda_plus = 0;
  double J_pq = 1;
};

inline Recurrence recurrence_coeffs(double p, double q, long K) {
  if (!(p >= 0) || !(q >= 0) || !(p + q < 1.0))
    throw ValidationError("recurrence: need p, q >= 0 and p + q < 1");
  if (K < 0) throw ValidationError("recurrence: K must be >= 0");
  Recurrence out;
  out.lambda_plus = (p + std::sqrt(p * p + 4.0 * q)) / 2.0;
  out.J_pq = 1.0 / (1.0 + out.lambda_plus - p);
  out.a.resize(std::size_t(K) + 1);
  out.b.resize(std::size_t(K) + 1);
  const double denom = 1.0 - (p + q);
  double pow_lam = out.lambda_plus;  // lambda^{K-k+1} at k = K
  for (long k = K; k >= 0; --k) {
    out.a[std::size_t(k)] = (1.0 - pow_lam) / denom;
    out.b[std::size_t(k)] = (out.lambda_plus - p) * out.a[std::size_t(k)];
    pow_lam *= out.lambda_plus;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Finite-time risk bound R_bar_K(theta) and its asymptotic limit.
// ---------------------------------------------------------------------------

namespace detail {

// sum_{j=0}^{n-1} lambda^j for 0 <= lambda < 1.
inline double geom_sum(double lam, long n) {
  return (1.0 - std::pow(lam, double(n))) / (1.0 - lam);
}

// hat c(K, theta): the log-sum of sub-gaussian MGF factors along the
// recurrence weights; theta = 0 is the linearized limit 4 sigma^2 r sum a.
inline Extd hat_c(const BoundCoefficients& bc, double theta, long K,
                  double sigma2, double c) {
  const double lam = bc.lambda_plus;
  const double denom = 1.0 - (bc.p + bc.q);
  if (theta > 0 && !(theta * sq(bc.H_bar_inf) < 1.0)) return Extd::infinity();
  KahanSum acc;
  double pow_lam = lam;  // lambda^{K-j+1} at j = K
  for (long j = K; j >= 1; --j) {
    const double a = (1.0 - pow_lam) / denom;
    if (theta == 0.0) {
      acc.add(4.0 * sigma2 * bc.r * a);
    } else {
      const double x = theta * bc.r * a;
      if (!(x < c)) return Extd::infinity();  // guard; implied by the check above
      acc.add(2.0 * sigma2 * c / theta * std::log((c + x) / (c - x)));
    }
    pow_lam *= lam;
  }
  return Extd(acc.s);
}

// bar c(K, theta) = (sum_{j=0}^{K} lambda^j - 1 + J) V0 + hat c(K, theta).
inline Extd bar_c(const BoundCoefficients& bc, double theta, long K,
                  double sigma2, double c) {
  const Extd hc = hat_c(bc, theta, K, sigma2, c);
  if (!hc.is_finite()) return hc;
  const double head =
      (geom_sum(bc.lambda_plus, K + 1) - 1.0 + bc.J_pq) * bc.V0;
  return Extd(head + hc.value());
}

}  // namespace detail

inline Extd risk_bound_finite(const BoundCoefficients& bc, double theta,
                              long K, double sigma2, double L) {
  if (!(theta >= 0))
    throw ValidationError("risk bound: theta must be >= 0");
  if (K < 1) throw ValidationError("risk bound: K must be >= 1");
  if (!(sigma2 >= 0)) throw ValidationError("risk bound: sigma2 must be >= 0");
  if (theta > 0 && !(std::sqrt(theta) * bc.H_bar_inf < 1.0))
    return Extd::infinity();
  const double c = bc.c1 + 2.0 / L * bc.r_tilde;
  // Branch 1 rescales theta by J and needs its own guard.
  Extd branch1 = Extd::infinity();
  const double theta_j = theta / bc.J_pq;
  if (theta == 0.0 || std::sqrt(theta_j) * bc.H_bar_inf < 1.0) {
    const Extd cb = detail::bar_c(bc, theta_j, K, sigma2, c);
    if (cb.is_finite()) branch1 = Extd(cb.value() / bc.J_pq);
  }
  const Extd branch2 = detail::bar_c(bc, theta, K + 1, sigma2, c);
  const Extd best = branch1 < branch2 ? branch1 : branch2;
  if (!best.is_finite()) return best;
  return Extd(best.value() / (c * double(K + 1)));
}

inline Extd risk_bound_asymptotic(const BoundCoefficients& bc, double theta,
                                  double sigma2) {
  if (!(theta >= 0))
    throw ValidationError("asymptotic risk bound: theta must be >= 0");
  if (!(sigma2 >= 0))
    throw ValidationError("asymptotic risk bound: sigma2 must be >= 0");
  const double h2 = sq(bc.H_bar_inf);
  if (theta == 0.0) return Extd(4.0 * sigma2 * h2);
  if (!(theta * h2 < 1.0)) return Extd::infinity();
  return Extd(2.0 * sigma2 / theta *
              std::log((1.0 + theta * h2) / (1.0 - theta * h2)));
}

// ---------------------------------------------------------------------------
// The variational tail dual Psi and the large-deviation exponents.
// ---------------------------------------------------------------------------

inline double psi(double t, double a_check, double b_check, double sigma2) {
  if (!(b_check > 0)) throw ValidationError("psi: b_check must be > 0");
  if (!(sigma2 > 0)) throw ValidationError("psi: sigma2 must be > 0");
  if (!(a_check >= 0)) throw ValidationError("psi: a_check must be >= 0");
  const double gap = t - a_check;
  const double u = 4.0 * sigma2 * b_check;
  if (gap < u) return 0.0;  // includes t < a_check
  const double ratio = u / gap;          // in (0, 1]
  const double x = std::sqrt(1.0 - ratio);
  if (x == 0.0) return 0.0;
  // log((1+x)/(1-x)) with 1 - x^2 = ratio, stable for x near 1.
  const double log_ratio = 2.0 * std::log1p(x) - std::log(ratio);
  return gap / (2.0 * sigma2 * b_check) * x - log_ratio;
}

// Maximizing theta of the dual problem behind psi (0 on the zero branch).
inline double psi_maximizer(double t, double a_check, double b_check,
                            double sigma2) {
  if (!(b_check > 0)) throw ValidationError("psi: b_check must be > 0");
  const double gap = t - a_check;
  const double u = 4.0 * sigma2 * b_check;
  if (gap < u) return 0.0;
  return std::sqrt(1.0 - u / gap) / b_check;
}

// Finite-K rate exponent I_bar_K(t) for the averaged iterates: the better of
// the two Chernoff optimizations (per-horizon vs. full-sum weighting).
inline double ldp_exponent_finite(const BoundCoefficients& bc, long K,
                                  double t, double sigma2, double L) {
  if (K < 1) throw ValidationError("ldp: K must be >= 1");
  if (!(t >= 0)) throw ValidationError("ldp: t must be >= 0");
  if (!(sigma2 > 0)) throw ValidationError("ldp: sigma2 must be > 0");
  const double c = bc.c1 + 2.0 / L * bc.r_tilde;
  const double lam = bc.lambda_plus;
  const double J = bc.J_pq;
  const double h2 = sq(bc.H_bar_inf);
  const double a1 = (detail::geom_sum(lam, K + 1) - 1.0 + J) * bc.V0 /
                    (c * double(K));
  const double b1 = (1.0 - std::pow(lam, double(K))) * h2 / J;
  const double ch1 = double(K) / (double(K + 1) * J);
  const double a2 = (detail::geom_sum(lam, K + 2) - 1.0 + J) * bc.V0 /
                    (c * double(K + 1));
  const double b2 = (1.0 - std::pow(lam, double(K + 1))) * h2;
  return std::max(ch1 * psi(t / ch1, a1, b1, sigma2), psi(t, a2, b2, sigma2));
}

// Chernoff-type probability bound exp(-(K+1)(theta/2sigma^2)(t - R_bar_K)),
// clamped into [0, 1].
inline double chernoff_prob_bound(const BoundCoefficients& bc, long K,
                                  double t, double theta, double sigma2,
                                  double L) {
  if (!(t >= 0)) throw ValidationError("chernoff: t must be >= 0");
  if (!(theta >= 0) || !(theta * sq(bc.H_bar_inf) < 1.0))
    throw ValidationError("chernoff: theta must lie in [0, 1/Hbar^2)");
  if (!(sigma2 > 0)) throw ValidationError("chernoff: sigma2 must be > 0");
  if (theta == 0.0) return 1.0;
  const Extd rb = risk_bound_finite(bc, theta, K, sigma2, L);
  const double exponent =
      -double(K + 1) * theta / (2.0 * sigma2) * (t - rb.value());
  return std::min(1.0, std::exp(exponent));
}

// Asymptotic exponent I_bar(t) = Psi(t, 0, Hbar^2), the K -> infinity limit.
inline double ldp_bound_asymptotic(const BoundCoefficients& bc, double t,
                                   double sigma2) {
  if (!(t >= 0)) throw ValidationError("ldp: t must be >= 0");
  return psi(t, 0.0, sq(bc.H_bar_inf), sigma2);
}

}  // namespace rsopt
