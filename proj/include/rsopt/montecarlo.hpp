#pragma once

// Monte Carlo validation layer: path simulation of the noisy GMM recursion,
// log-sum-exp risk estimation, empirical tail frequencies, and the
// rate-vs-risk Pareto sweep.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "rsopt/dare.hpp"
#include "rsopt/gmm.hpp"
#include "rsopt/noise.hpp"
#include "rsopt/problems.hpp"
#include "rsopt/risk_exact.hpp"
#include "rsopt/rng.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

// Iterate norms beyond this are treated as divergence.
inline constexpr double kDivergenceNorm = 1e30;

// Called after every accepted step with the realized gradient error; used by
// the tests to check the Lyapunov decay pathwise.
using StepHook = std::function<void(
    long path, long k, const Vector<double>& x_next, const Vector<double>& x,
    const Vector<double>& x_prev, const Vector<double>& w)>;

struct SimOptions {
  // Suboptimality snapshots are kept every `record_every` iterations (plus
  // k = K always).  The running sums behind S_k and x-bar_k are exact
  // regardless of the stride; the stride only bounds memory at large n*K.
  long record_every = 1;
  Vector<double> x0;  // empty -> origin
  StepHook hook;
  bool force_generic = false;  // disable the d = 1 scalar fast path (tests)
};

struct PathEnsemble {
  long n_paths = 0;
  long K = 0;
  std::uint64_t seed = 0;
  std::vector<long> ks;  // recorded iterations, ascending, last entry is K

  // One row per path, one column per recorded iteration.
  Matrix<double> subopt;           // f(x_k) - f*
  Matrix<double> cum_subopt;       // S_k = sum_{j=0}^{k} (f(x_j) - f*)
  Matrix<double> avg_iter_subopt;  // f(x-bar_k) - f*

  std::vector<double> averaged_subopt;  // f(x-bar_K) - f* per path
  std::vector<char> diverged;           // per path
  long n_diverged = 0;

  Eigen::Index col_of(long k) const {
    const auto it = std::lower_bound(ks.begin(), ks.end(), k);
    if (it == ks.end() || *it != k)
      throw ValidationError("ensemble: iteration " + std::to_string(k) +
                            " was not recorded");
    return static_cast<Eigen::Index>(it - ks.begin());
  }
};

namespace detail {

inline std::vector<long> recorded_ks(long K, long stride) {
  std::vector<long> ks;
  for (long k = 0; k <= K; k += stride) ks.push_back(k);
  if (ks.back() != K) ks.push_back(K);
  return ks;
}

}  // namespace detail

// Simulates n_paths independent runs of
//   x_{k+1} = x_k - alpha (grad f(y_k) + w_{k+1}) + beta (x_k - x_{k-1}),
//   y_k = x_k + nu (x_k - x_{k-1}),      x_{-1} = x_0,
// with w_{k+1} drawn from `noise` (bias sequences are indexed by k).  Each
// path uses the substream CounterRng(seed, path), so the ensemble is
// bit-identical for a given (seed, config) regardless of scheduling.  Paths
// whose iterate norm exceeds 1e30 are flagged diverged; their remaining
// records are NaN.
template <typename Problem>
PathEnsemble simulate(const Problem& prob, const GmmParams& params,
                      const NoiseModel& noise, long K, long n_paths,
                      std::uint64_t seed, const SimOptions& opt = {}) {
  params.validate();
  if (K < 0) throw ValidationError("simulate: K must be >= 0");
  if (n_paths <= 0) throw ValidationError("simulate: n_paths must be > 0");
  if (opt.record_every < 1)
    throw ValidationError("simulate: record_every must be >= 1");
  const Eigen::Index d = prob.dim();
  Vector<double> x0 = opt.x0.size() ? opt.x0 : Vector<double>::Zero(d);
  if (x0.size() != d)
    throw ValidationError("simulate: x0 dimension mismatch");

  PathEnsemble ens;
  ens.n_paths = n_paths;
  ens.K = K;
  ens.seed = seed;
  ens.ks = detail::recorded_ks(K, opt.record_every);
  const Eigen::Index n_rec = static_cast<Eigen::Index>(ens.ks.size());
  ens.subopt.resize(n_paths, n_rec);
  ens.cum_subopt.resize(n_paths, n_rec);
  ens.avg_iter_subopt.resize(n_paths, n_rec);
  ens.averaged_subopt.assign(std::size_t(n_paths), 0.0);
  ens.diverged.assign(std::size_t(n_paths), 0);

  const double nan = std::numeric_limits<double>::quiet_NaN();
  const bool zero_noise = noise.kind == NoiseModel::Kind::Zero;
  const bool plain_gaussian =
      noise.kind == NoiseModel::Kind::IsotropicGaussian;

  // Scalar fast path: d = 1 quadratics under plain Gaussian/zero noise is
  // the regime of the 10^9-step consistency runs; it consumes the RNG stream
  // exactly like the generic loop (one gaussian per step).
  if constexpr (std::is_same_v<Problem, QuadraticProblem<double>>) {
    if (!opt.force_generic && !opt.hook && d == 1 &&
        (zero_noise || plain_gaussian)) {
      const double lam = prob.eigenvalues(0);
      const double xs = prob.xstar(0);
      const double scale = plain_gaussian ? std::sqrt(noise.sigma2) : 0.0;
      const double alpha = params.alpha, beta = params.beta, nu = params.nu;
      for (long path = 0; path < n_paths; ++path) {
        CounterRng rng(seed, std::uint64_t(path));
        double x = x0(0), xp = x;
        double e = x - xs;
        double so = 0.5 * lam * e * e;
        KahanSum S, xbar;
        S.add(so);
        xbar.add(x);
        Eigen::Index rec = 0;
        bool died = false;
        auto record = [&](long k) {
          ens.subopt(path, rec) = so;
          ens.cum_subopt(path, rec) = S.s;
          const double eb = xbar.s / double(k + 1) - xs;
          ens.avg_iter_subopt(path, rec) = 0.5 * lam * eb * eb;
          ++rec;
        };
        if (ens.ks[0] == 0) record(0);
        for (long k = 1; k <= K; ++k) {
          const double y = x + nu * (x - xp);
          const double g = lam * (y - xs);
          const double w = plain_gaussian ? scale * rng.gaussian() : 0.0;
          const double xn = x - alpha * (g + w) + beta * (x - xp);
          xp = x;
          x = xn;
          if (!(std::abs(x) <= kDivergenceNorm)) {
            died = true;
            break;
          }
          e = x - xs;
          so = 0.5 * lam * e * e;
          S.add(so);
          xbar.add(x);
          if (rec < n_rec && ens.ks[std::size_t(rec)] == k) record(k);
        }
        if (died) {
          ens.diverged[std::size_t(path)] = 1;
          ++ens.n_diverged;
          for (; rec < n_rec; ++rec) {
            ens.subopt(path, rec) = nan;
            ens.cum_subopt(path, rec) = nan;
            ens.avg_iter_subopt(path, rec) = nan;
          }
          ens.averaged_subopt[std::size_t(path)] = nan;
        } else {
          ens.averaged_subopt[std::size_t(path)] =
              ens.avg_iter_subopt(path, n_rec - 1);
        }
      }
      return ens;
    }
  }

  const double alpha = params.alpha, beta = params.beta, nu = params.nu;
  Vector<double> x(d), xp(d), y(d), g(d), w(d), xn(d), xbar_sum(d), tmp(d);
  for (long path = 0; path < n_paths; ++path) {
    CounterRng rng(seed, std::uint64_t(path));
    x = x0;
    xp = x0;
    double so = prob.suboptimality(x);
    KahanSum S;
    S.add(so);
    xbar_sum = x;

    SampleContext ctx;
    ctx.y = &y;
    if constexpr (std::is_same_v<Problem, HuberProblem<double>>) {
      ctx.huber = &prob;
      if (noise.contains(NoiseModel::Kind::AdversarialBall))
        ctx.batch_suboptimality_with_noise =
            [&](const Matrix<double>& W, Vector<double>& scores) {
              tmp = x - alpha * g + beta * (x - xp);
              Matrix<double> X = (-alpha * W).colwise() + tmp;
              prob.suboptimality_batch(X, scores);
            };
    }
    ctx.suboptimality_with_noise = [&](const Vector<double>& wt) {
      return prob.suboptimality(x - alpha * (g + wt) + beta * (x - xp));
    };

    Eigen::Index rec = 0;
    bool died = false;
    long died_at = 0;
    auto record = [&](long k) {
      ens.subopt(path, rec) = so;
      ens.cum_subopt(path, rec) = S.s;
      ens.avg_iter_subopt(path, rec) =
          prob.suboptimality(xbar_sum / double(k + 1));
      ++rec;
    };
    if (ens.ks[0] == 0) record(0);
    for (long k = 1; k <= K; ++k) {
      y = x + nu * (x - xp);
      g = prob.gradient(y);
      ctx.k = k - 1;  // w_k is the error of the oracle call at iterate k-1
      if (zero_noise)
        w.setZero();
      else
        w = sample_noise(noise, rng, ctx, d);
      xn = x - alpha * (g + w) + beta * (x - xp);
      if (opt.hook) opt.hook(path, k, xn, x, xp, w);
      xp = x;
      x = xn;
      if (!(x.norm() <= kDivergenceNorm)) {
        died = true;
        died_at = k;
        break;
      }
      so = prob.suboptimality(x);
      S.add(so);
      xbar_sum += x;
      if (rec < n_rec && ens.ks[std::size_t(rec)] == k) record(k);
    }
    (void)died_at;
    if (died) {
      ens.diverged[std::size_t(path)] = 1;
      ++ens.n_diverged;
      for (; rec < n_rec; ++rec) {
        ens.subopt(path, rec) = nan;
        ens.cum_subopt(path, rec) = nan;
        ens.avg_iter_subopt(path, rec) = nan;
      }
      ens.averaged_subopt[std::size_t(path)] = nan;
    } else {
      ens.averaged_subopt[std::size_t(path)] =
          ens.avg_iter_subopt(path, n_rec - 1);
    }
  }
  return ens;
}

// Query points y_0..y_{n-1} of the noiseless recursion; the variance proxy
// is estimated along this trajectory.
template <typename Problem>
std::vector<Vector<double>> reference_trajectory(const Problem& prob,
                                                 const GmmParams& params,
                                                 const Vector<double>& x0,
                                                 long n_points) {
  params.validate();
  if (n_points <= 0)
    throw ValidationError("reference trajectory: n_points must be > 0");
  Vector<double> x = x0.size() ? x0 : Vector<double>::Zero(prob.dim());
  if (x.size() != prob.dim())
    throw ValidationError("reference trajectory: x0 dimension mismatch");
  Vector<double> xp = x;
  std::vector<Vector<double>> ys;
  ys.reserve(std::size_t(n_points));
  for (long k = 0; k < n_points; ++k) {
    const Vector<double> y = x + params.nu * (x - xp);
    ys.push_back(y);
    const Vector<double> xn =
        x - params.alpha * prob.gradient(y) + params.beta * (x - xp);
    xp = x;
    x = xn;
    if (!(x.norm() <= kDivergenceNorm))
      throw NumericalError("reference trajectory diverged");
  }
  return ys;
}

// ---------------------------------------------------------------------------
// Empirical risk R-hat_k(theta).
// ---------------------------------------------------------------------------

struct EmpiricalRisk {
  double theta = 0;
  double sigma2_hat = 0;
  std::vector<long> ks;
  std::vector<double> values;  // R-hat_k(theta)
  std::vector<double> ess;     // effective sample size of the tilt
  long n_used = 0;
  long n_excluded = 0;
  std::vector<std::string> warnings;
};

// R-hat_k(theta) = (2 sigma2/(theta (k+1))) [logsumexp_l (theta/2sigma2)
// S_k^(l) - log n], evaluated with max-subtraction; theta = 0 is the plain
// mean of S_k/(k+1).  Diverged paths are excluded (counted), which biases
// risk-seeking theta < 0 estimates upward-in-theta; a warning notes this.
inline EmpiricalRisk empirical_risk(const PathEnsemble& ens, double theta,
                                    double sigma2_hat) {
  if (theta != 0 && !(sigma2_hat > 0))
    throw ValidationError("empirical risk: sigma2_hat must be > 0");
  std::vector<Eigen::Index> use;
  for (long p = 0; p < ens.n_paths; ++p)
    if (!ens.diverged[std::size_t(p)]) use.push_back(p);
  if (use.empty())
    throw NumericalError("empirical risk: every path diverged");

  EmpiricalRisk out;
  out.theta = theta;
  out.sigma2_hat = sigma2_hat;
  out.ks = ens.ks;
  out.n_used = long(use.size());
  out.n_excluded = ens.n_paths - out.n_used;
  if (out.n_excluded > 0) {
    std::string w = std::to_string(out.n_excluded) +
                    " diverged path(s) excluded from the estimate";
    if (theta < 0) w += "; risk-seeking estimates are biased by exclusion";
    out.warnings.push_back(std::move(w));
  }

  const double n = double(use.size());
  double min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < ens.ks.size(); ++c) {
    const auto col = static_cast<Eigen::Index>(c);
    const double kp1 = double(ens.ks[c] + 1);
    if (theta == 0) {
      KahanSum acc;
      for (const auto p : use) acc.add(ens.cum_subopt(p, col) / kp1);
      out.values.push_back(acc.s / n);
      out.ess.push_back(n);
      continue;
    }
    const double scale = theta / (2.0 * sigma2_hat);
    double m = -std::numeric_limits<double>::infinity();
    for (const auto p : use) m = std::max(m, scale * ens.cum_subopt(p, col));
    KahanSum se, se2;
    for (const auto p : use) {
      const double e = std::exp(scale * ens.cum_subopt(p, col) - m);
      se.add(e);
      se2.add(e * e);
    }
    const double lse = m + std::log(se.s);
    out.values.push_back((lse - std::log(n)) / (scale * kp1));
    const double ess = se.s * se.s / se2.s;
    out.ess.push_back(ess);
    min_ess = std::min(min_ess, ess);
  }
  if (theta != 0 && min_ess < 100.0) {
    char buf[160];
    std::snprintf(buf, sizeof(buf),
                  "effective sample size of the exponential tilt drops to "
                  "%.1f (< 100); the estimate is heavy-tailed",
                  min_ess);
    out.warnings.push_back(buf);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Empirical tail frequencies at the final iterate.
// ---------------------------------------------------------------------------

struct TailEstimate {
  double t = 0;
  double frac_time_avg = 0;     // P(S_K/(K+1) >= t)
  double frac_avg_iterate = 0;  // P(f(x-bar_K) - f* >= t)
  long n_paths = 0;
};

// Diverged paths count as exceedances of both events.
inline TailEstimate empirical_tail(const PathEnsemble& ens, double t) {
  if (!(t >= 0)) throw ValidationError("empirical tail: t must be >= 0");
  TailEstimate out;
  out.t = t;
  out.n_paths = ens.n_paths;
  const Eigen::Index last = static_cast<Eigen::Index>(ens.ks.size()) - 1;
  const double kp1 = double(ens.K + 1);
  long hits_avg = 0, hits_iter = 0;
  for (long p = 0; p < ens.n_paths; ++p) {
    if (ens.diverged[std::size_t(p)]) {
      ++hits_avg;
      ++hits_iter;
      continue;
    }
    if (ens.cum_subopt(p, last) / kp1 >= t) ++hits_avg;
    if (ens.avg_iter_subopt(p, last) >= t) ++hits_iter;
  }
  out.frac_time_avg = double(hits_avg) / double(ens.n_paths);
  out.frac_avg_iterate = double(hits_iter) / double(ens.n_paths);
  return out;
}

// ---------------------------------------------------------------------------
// Pareto sweep over (alpha, beta) grids.
// ---------------------------------------------------------------------------

enum class SweepMethod { Gd, Hb, Nag };

inline SweepMethod parse_sweep_method(const std::string& name) {
  if (name == "gd" || name == "GD") return SweepMethod::Gd;
  if (name == "hb" || name == "HB") return SweepMethod::Hb;
  if (name == "nag" || name == "NAG") return SweepMethod::Nag;
  throw ValidationError("pareto: unknown method '" + name +
                        "' (expected gd|hb|nag)");
}

struct SweepGrid {
  long n_alpha = 0;  // 0 -> method default (GD 500, HB/NAG 300)
  long n_beta = 0;   // 0 -> 300 (ignored for GD)
  double alpha_max = 0;  // 0 -> 2/L
  double beta_max = 2.0;
  bool paper_scale = false;  // 5000 / 3000x3000
};

struct SweepPoint {
  double alpha = 0, beta = 0;
  double rho = 0;
  Extd R;
};

struct ParetoResult {
  std::vector<SweepPoint> points;
  std::vector<std::size_t> frontier;  // indices into points, rho ascending
};

// Frontier: sort stable points by rho ascending and keep strict improvements
// of the running minimum of R.  R is then non-increasing along the frontier.
inline std::vector<std::size_t> extract_frontier(
    const std::vector<SweepPoint>& pts) {
  std::vector<std::size_t> order(pts.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (pts[a].rho != pts[b].rho) return pts[a].rho < pts[b].rho;
    return a < b;
  });
  std::vector<std::size_t> frontier;
  Extd best = Extd::infinity();
  for (const auto i : order) {
    if (pts[i].rho >= 1.0) continue;  // unstable
    if (pts[i].R < best) {
      frontier.push_back(i);
      best = pts[i].R;
    }
  }
  return frontier;
}

namespace detail {

// Riccati-route risk at one grid point; +infinity for unstable parameters,
// theta past the gain limit, or a DARE failure at the stability edge.
inline Extd sweep_risk(const Vector<double>& evals, const GmmParams& p,
                       double theta, double sigma2, double rho) {
  if (rho >= 1.0) return Extd::infinity();
  const Eigen::Index d = evals.size();
  const double mu = evals(0), L = evals(d - 1);
  const double hinf = h_infinity_quadratic(p, mu, L);
  if (!(theta * hinf * hinf < double(d))) return Extd::infinity();
  KahanSum acc;
  for (Eigen::Index i = 0; i < d; ++i) {
    double x11;
    if (p.beta == 0.0 && p.nu == 0.0) {
      const Extd a = gd_closed_form(evals(i), p.alpha, theta, d);
      if (!a.is_finite()) return Extd::infinity();
      x11 = a.value();
    } else {
      try {
        const DareInstance inst = DareInstance::make(evals(i), p, theta, d);
        const DareSolution sol = solve_dare_2x2(inst);
        x11 = sol.X_tilde(0, 0);
      } catch (const NumericalError&) {
        return Extd::infinity();
      }
    }
    const double arg = theta / double(d) * p.alpha * p.alpha * x11;
    if (!(arg < 1.0)) return Extd::infinity();
    acc.add(std::log1p(-arg));
  }
  return Extd(-sigma2 / theta * acc.s);
}

}  // namespace detail

inline ParetoResult pareto_sweep(const QuadraticProblem<double>& prob,
                                 SweepMethod method, const SweepGrid& grid,
                                 double theta, double sigma2) {
  if (!(theta > 0)) throw ValidationError("pareto: theta must be > 0");
  if (!(sigma2 >= 0)) throw ValidationError("pareto: sigma2 must be >= 0");
  const double L = prob.L();
  const double alpha_max = grid.alpha_max > 0 ? grid.alpha_max : 2.0 / L;
  const bool gd = method == SweepMethod::Gd;
  const long def_a = gd ? (grid.paper_scale ? 5000 : 500)
                        : (grid.paper_scale ? 3000 : 300);
  const long na = grid.n_alpha > 0 ? grid.n_alpha : def_a;
  const long nb = gd ? 1
                     : (grid.n_beta > 0 ? grid.n_beta
                                        : (grid.paper_scale ? 3000 : 300));
  if (na < 1 || nb < 1) throw ValidationError("pareto: empty grid");

  ParetoResult out;
  out.points.reserve(std::size_t(na * nb));
  for (long i = 0; i < na; ++i) {
    const double alpha = alpha_max * (double(i) + 0.5) / double(na);
    for (long j = 0; j < nb; ++j) {
      const double beta =
          gd ? 0.0 : grid.beta_max * (double(j) + 0.5) / double(nb);
      GmmParams p;
      p.alpha = alpha;
      p.beta = beta;
      p.nu = method == SweepMethod::Nag ? beta : 0.0;
      SweepPoint pt;
      pt.alpha = alpha;
      pt.beta = beta;
      pt.rho = quadratic_rate(p, prob.eigenvalues);
      pt.R = detail::sweep_risk(prob.eigenvalues, p, theta, sigma2, pt.rho);
      out.points.push_back(pt);
    }
  }
  out.frontier = extract_frontier(out.points);
  return out;
}

}  // namespace rsopt
