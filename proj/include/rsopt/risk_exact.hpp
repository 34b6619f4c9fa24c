#pragma once

// Exact quadratic-case analytics: per-mode H-infinity gains in closed form,
// the risk-sensitive index R(theta) by the Riccati route and by the
// frequency-domain integral, the large-deviation rate function I(s) as the
// Legendre transform of theta -> theta R(theta), and asymptotic tail
// exponents.

#include <cmath>
#include <cstdio>
#include <vector>

#include "rsopt/dare.hpp"
#include "rsopt/gmm.hpp"
#include "rsopt/problems.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

// ---------------------------------------------------------------------------
// Per-mode gains and the H-infinity norm.
// ---------------------------------------------------------------------------

struct ModeGain {
  double lambda = 0;
  double b_tilde = 0;  // alpha lambda (1+nu) - (1+beta)
  double c_tilde = 0;  // beta - alpha nu lambda
  double s_tilde = 0;
  double gain = 0;     // (alpha/sqrt(2)) sqrt(lambda) / s_tilde
};

inline ModeGain mode_gain(const GmmParams& p, double lambda) {
  if (!(lambda > 0)) throw ValidationError("mode gain: lambda must be > 0");
  p.validate();
  if (!(modal_radius(p, lambda) < 1.0))
    throw ValidationError("mode gain: parameters unstable at this eigenvalue");
  ModeGain m;
  m.lambda = lambda;
  m.b_tilde = modal_b(p, lambda);
  m.c_tilde = modal_c(p, lambda);
  const double b = m.b_tilde, c = m.c_tilde;
  // Two-case formula; ties fall to the second branch.
  if (c > 0.0 && std::abs(b) * (1.0 + c) / (4.0 * c) < 1.0)
    m.s_tilde = std::abs(1.0 - c) * std::sqrt(1.0 - b * b / (4.0 * c));
  else
    m.s_tilde = std::abs(std::abs(1.0 + c) - std::abs(b));
  m.gain = p.alpha / std::sqrt(2.0) * std::sqrt(lambda) / m.s_tilde;
  return m;
}

inline double h_infinity_quadratic(const GmmParams& p, double mu, double L) {
  if (!(mu > 0) || !(L >= mu))
    throw ValidationError("h_infinity: need 0 < mu <= L");
  return std::max(mode_gain(p, mu).gain, mode_gain(p, L).gain);
}

template <typename Derived>
double h_infinity_spectrum(const GmmParams& p,
                           const Eigen::MatrixBase<Derived>& evals) {
  if (evals.size() == 0) throw ValidationError("h_infinity: empty spectrum");
  double h = 0;
  for (Eigen::Index i = 0; i < evals.size(); ++i)
    h = std::max(h, mode_gain(p, evals(i)).gain);
  return h;
}

// Frequency response h_omega(lambda) of the suboptimality output map.
inline double transfer_gain(const GmmParams& p, double lambda, double omega) {
  if (!(lambda > 0))
    throw ValidationError("transfer gain: lambda must be > 0");
  p.validate();
  const double b = modal_b(p, lambda);
  const double c = modal_c(p, lambda);
  const double cw = std::cos(omega);
  const double c2w = 2.0 * cw * cw - 1.0;
  const double denom =
      2.0 * (1.0 + b * b + c * c + 2.0 * (b * (1.0 + c) * cw + c * c2w));
  if (!(denom > 0))
    throw ValidationError(
        "transfer gain: nonpositive denominator (pole on the unit circle)");
  return p.alpha * p.alpha * lambda / denom;
}

// ---------------------------------------------------------------------------
// Risk evaluator: holds the spectrum, H-infinity data, and the cached
// frequency samples the quadrature reuses across theta values.
// ---------------------------------------------------------------------------

struct Quadrature {
  int initial_panels = 4096;
  double tol = 1e-10;        // relative agreement between refinements
  long max_panels = 1 << 24;
};

namespace detail {

// Composite Simpson over [0, pi] of f(node_value), nodes equally spaced.
template <typename F>
double simpson_0_pi(const std::vector<double>& node_vals, F&& f) {
  const std::size_t n = node_vals.size() - 1;  // panel count, even
  KahanSum acc;
  acc.add(f(node_vals[0]));
  acc.add(f(node_vals[n]));
  for (std::size_t i = 1; i < n; ++i)
    acc.add((i % 2 ? 4.0 : 2.0) * f(node_vals[i]));
  return acc.s * (M_PI / double(n)) / 3.0;
}

}  // namespace detail

class RiskEvaluator {
 public:
  RiskEvaluator(std::vector<double> lambdas, const GmmParams& params,
                double sigma2, Eigen::Index d, Quadrature quad = {})
      : lambdas_(std::move(lambdas)), params_(params), sigma2_(sigma2),
        d_(d), quad_(quad) {
    if (lambdas_.empty()) throw ValidationError("risk: empty spectrum");
    if (d_ <= 0) throw ValidationError("risk: dimension must be > 0");
    if (!(sigma2_ >= 0)) throw ValidationError("risk: sigma2 must be >= 0");
    params_.validate();
    h_inf_ = 0;
    for (double lam : lambdas_)
      h_inf_ = std::max(h_inf_, mode_gain(params_, lam).gain);
    cache_.resize(lambdas_.size());
  }

  static RiskEvaluator for_problem(const QuadraticProblem<double>& problem,
                                   const GmmParams& params, double sigma2,
                                   Quadrature quad = {}) {
    std::vector<double> lams(problem.eigenvalues.data(),
                             problem.eigenvalues.data() + problem.dim());
    return RiskEvaluator(std::move(lams), params, sigma2, problem.dim(), quad);
  }

  double h_inf() const { return h_inf_; }
  double theta_star() const { return double(d_) / (h_inf_ * h_inf_); }
  double sigma2() const { return sigma2_; }
  Eigen::Index dimension() const { return d_; }
  const std::vector<double>& lambdas() const { return lambdas_; }

  // Riccati route: R(theta) = -(sigma^2/theta) sum_i log(1 - (theta/d)
  // alpha^2 X11^{(lambda_i)}), infinite once sqrt(theta) Hinf >= sqrt(d).
  Extd riccati(double theta) const {
    if (!(theta > 0))
      throw ValidationError("risk riccati: theta must be > 0");
    if (theta * h_inf_ * h_inf_ >= double(d_)) return Extd::infinity();
    double sum = 0;
    for (double lam : lambdas_) {
      const DareInstance inst = DareInstance::make(lam, params_, theta, d_);
      DareSolution sol;
      try {
        sol = solve_dare_2x2(inst);
      } catch (const NumericalError& e) {
        char buf[256];
        std::snprintf(buf, sizeof(buf), "%s [theta_star estimate %.17g]",
                      e.what(), theta_star());
        throw NumericalError(buf);
      }
      const double x = theta / double(d_) * sq(params_.alpha) *
                       sol.X_tilde(0, 0);
      if (!(x < 1.0))
        throw NumericalError("risk riccati: log argument not positive");
      sum += std::log1p(-x);
    }
    return Extd(-sigma2_ / theta * sum);
  }

  // Frequency route: R(theta) = -(sigma^2/(2 pi theta)) sum_i int_{-pi}^{pi}
  // log(1 - (theta/d) h_omega(lambda_i)) d omega, with the theta = 0 value
  // given by the continuity convention (sigma^2/(2 pi d)) sum_i int h.
  Extd integral(double theta) {
    if (theta > 0 && theta * h_inf_ * h_inf_ >= double(d_))
      return Extd::infinity();
    if (theta == 0.0) {
      double total = 0;
      for (std::size_t m = 0; m < lambdas_.size(); ++m)
        total += converge_mode(m, [](double h) { return h; });
      return Extd(sigma2_ / (M_PI * double(d_)) * total);
    }
    const double scale = theta / double(d_);
    double total = 0;
    for (std::size_t m = 0; m < lambdas_.size(); ++m) {
      total += converge_mode(m, [scale](double h) {
        const double arg = 1.0 - scale * h;
        if (!(arg > 0))
          throw NumericalError("risk integral: integrand singular");
        return std::log(arg);
      });
    }
    return Extd(-sigma2_ / (M_PI * theta) * total);
  }

 private:
  // Frequency samples of mode m at refinement level j (initial * 2^j panels).
  const std::vector<double>& level(std::size_t m, int j) {
    auto& levels = cache_[m];
    while (int(levels.size()) <= j) {
      const int jj = int(levels.size());
      const long n = long(quad_.initial_panels) << jj;
      std::vector<double> vals(std::size_t(n) + 1);
      for (long i = 0; i <= n; ++i)
        vals[std::size_t(i)] =
            transfer_gain(params_, lambdas_[m], M_PI * double(i) / double(n));
      levels.push_back(std::move(vals));
    }
    return levels[std::size_t(j)];
  }

  // Refine until two successive Simpson estimates agree to quad_.tol.
  template <typename F>
  double converge_mode(std::size_t m, F&& f) {
    double prev = detail::simpson_0_pi(level(m, 0), f);
    for (int j = 1;; ++j) {
      if ((long(quad_.initial_panels) << j) > quad_.max_panels)
        throw NumericalError("risk integral: quadrature did not converge");
      const double cur = detail::simpson_0_pi(level(m, j), f);
      if (std::abs(cur - prev) <=
          quad_.tol * std::max(std::abs(cur), 1e-300))
        return cur;
      prev = cur;
    }
  }

  std::vector<double> lambdas_;
  GmmParams params_;
  double sigma2_ = 0;
  Eigen::Index d_ = 0;
  Quadrature quad_;
  double h_inf_ = 0;
  std::vector<std::vector<std::vector<double>>> cache_;  // [mode][level][node]
};

inline Extd risk_index_riccati(const QuadraticProblem<double>& problem,
                               const GmmParams& params, double theta,
                               double sigma2) {
  return RiskEvaluator::for_problem(problem, params, sigma2).riccati(theta);
}

inline Extd risk_index_integral(const QuadraticProblem<double>& problem,
                                const GmmParams& params, double theta,
                                double sigma2, Quadrature quad = {}) {
  return RiskEvaluator::for_problem(problem, params, sigma2, quad)
      .integral(theta);
}

// ---------------------------------------------------------------------------
// Risk profiles over a theta grid.
// ---------------------------------------------------------------------------

enum class RiskRoute { Riccati, Integral, Montecarlo, Bound };

struct RiskProfile {
  std::vector<double> theta_grid;
  std::vector<Extd> values;
  double theta_star = 0;  // d / Hinf^2
  RiskRoute route = RiskRoute::Riccati;
  double sigma2 = 0;
  Eigen::Index d = 0;
};

inline RiskProfile risk_profile(const QuadraticProblem<double>& problem,
                                const GmmParams& params, double sigma2,
                                std::vector<double> theta_grid,
                                RiskRoute route, Quadrature quad = {}) {
  if (route != RiskRoute::Riccati && route != RiskRoute::Integral)
    throw ValidationError("risk profile: route must be riccati or integral");
  RiskEvaluator ev = RiskEvaluator::for_problem(problem, params, sigma2, quad);
  RiskProfile out;
  out.theta_grid = std::move(theta_grid);
  out.theta_star = ev.theta_star();
  out.route = route;
  out.sigma2 = sigma2;
  out.d = problem.dim();
  out.values.reserve(out.theta_grid.size());
  for (double th : out.theta_grid)
    out.values.push_back(route == RiskRoute::Riccati ? ev.riccati(th)
                                                     : ev.integral(th));
  return out;
}

// Default CLI grid: 50 log-spaced points on (0, 0.98 theta_star].
inline std::vector<double> default_theta_grid(double theta_star, int n = 50,
                                              double decades = 3.0) {
  if (!(theta_star > 0))
    throw ValidationError("theta grid: theta_star must be > 0");
  if (n < 2) throw ValidationError("theta grid: need at least 2 points");
  std::vector<double> grid(static_cast<std::size_t>(n));
  const double hi = std::log(0.98 * theta_star);
  const double lo = hi - decades * std::log(10.0);
  for (int i = 0; i < n; ++i)
    grid[std::size_t(i)] = std::exp(lo + (hi - lo) * double(i) / double(n - 1));
  return grid;
}

// ---------------------------------------------------------------------------
// Rate function I(s) = sup_{theta < theta_star} (theta/(2 sigma^2))
// (s - R(theta)); the objective is concave, so a bracketed golden-section
// search after geometric lower-bracket expansion finds the supremum.
// ---------------------------------------------------------------------------

struct RateFunction {
  std::vector<double> s_grid;
  std::vector<Extd> I_values;
  double argmin_s = 0;  // = R(0), the unique zero of I
  double H_inf = 0;
};

namespace detail {

// Maximize a concave function on [a, b]; returns the best value seen.
template <typename F>
double golden_max(F&& g, double a, double b, int iters = 200) {
  const double invphi = (std::sqrt(5.0) - 1.0) / 2.0;
  double x1 = b - invphi * (b - a);
  double x2 = a + invphi * (b - a);
  double f1 = g(x1), f2 = g(x2);
  for (int i = 0; i < iters; ++i) {
    if ((b - a) <= 1e-13 * (std::abs(a) + std::abs(b) + 1.0)) break;
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + invphi * (b - a);
      f2 = g(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - invphi * (b - a);
      f1 = g(x1);
    }
  }
  return std::max(f1, f2);
}

// sup of the concave conjugate objective for one s.  Returns +infinity when
// the geometric expansion hits the theta floor still ascending (s below the
// essential infimum of the suboptimality support).
template <typename G>
Extd conjugate_sup(G&& g, double theta_hi, double theta_floor) {
  double prev_t = theta_hi;
  double prev_g = g(theta_hi);
  double before_t = theta_hi;  // point above prev_t in the walk
  double step = std::abs(theta_hi) / 4.0;
  for (;;) {
    double t = prev_t - step;
    bool at_floor = false;
    if (t <= theta_floor) {
      t = theta_floor;
      at_floor = true;
    }
    const double gt = g(t);
    if (gt < prev_g) {
      const double sup = golden_max(g, t, before_t);
      return Extd(std::max(sup, prev_g));
    }
    if (at_floor) return Extd::infinity();  // still ascending at the floor
    before_t = prev_t;
    prev_t = t;
    prev_g = gt;
    step *= 2.0;
  }
}

}  // namespace detail

inline RateFunction rate_function(const QuadraticProblem<double>& problem,
                                  const GmmParams& params, double sigma2,
                                  std::vector<double> s_grid,
                                  Quadrature quad = {}) {
  if (!(sigma2 > 0)) throw ValidationError("rate function: sigma2 must be > 0");
  RiskEvaluator ev = RiskEvaluator::for_problem(problem, params, sigma2, quad);
  const double theta_star = ev.theta_star();
  const double theta_hi = theta_star * (1.0 - 1e-9);
  const double theta_floor = -1e6 * sigma2;

  RateFunction out;
  out.H_inf = ev.h_inf();
  out.argmin_s = ev.integral(0.0).value();
  out.s_grid = std::move(s_grid);
  out.I_values.reserve(out.s_grid.size());
  for (double s : out.s_grid) {
    auto g = [&](double th) {
      return th / (2.0 * sigma2) * (s - ev.integral(th).value());
    };
    Extd I = detail::conjugate_sup(g, theta_hi, theta_floor);
    if (I.is_finite() && I.value() < 0.0) I = Extd(0.0);  // theta = 0 is feasible
    out.I_values.push_back(I);
  }
  return out;
}

// Asymptotic tail exponent inf_{s >= t} I(s); by convexity and I(R(0)) = 0
// this is I(max(t, R(0))).
inline double tail_exponent(const QuadraticProblem<double>& problem,
                            const GmmParams& params, double sigma2, double t,
                            Quadrature quad = {}) {
  if (!(t > 0)) throw ValidationError("tail exponent: t must be > 0");
  if (!(sigma2 > 0)) throw ValidationError("tail exponent: sigma2 must be > 0");
  RiskEvaluator ev = RiskEvaluator::for_problem(problem, params, sigma2, quad);
  const double r0 = ev.integral(0.0).value();
  if (t <= r0) return 0.0;
  const double theta_hi = ev.theta_star() * (1.0 - 1e-9);
  auto g = [&](double th) {
    return th / (2.0 * sigma2) * (t - ev.integral(th).value());
  };
  const Extd I = detail::conjugate_sup(g, theta_hi, -1e6 * sigma2);
  return std::max(0.0, I.value());
}

}  // namespace rsopt
