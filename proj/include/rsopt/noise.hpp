#pragma once

// Gradient-error models.  Every model emits the *error* w added to the true
// gradient, so composites (e.g. minibatch + adversarial bias) are sums of
// model outputs.  All models are immutable; sampling draws from an explicit
// caller-owned RNG.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <utility>
#include <vector>

#include "rsopt/problems.hpp"
#include "rsopt/rng.hpp"
#include "rsopt/types.hpp"

namespace rsopt {

struct NoiseModel {
  enum class Kind {
    Zero,
    IsotropicGaussian,  // w ~ N(0, (sigma2/d) I), variance proxy sigma2
    BiasedGaussian,     // N(0, sigma2_tilde/d I) + bias_k, ||bias_k|| <= M
    AdversarialBall,    // worst of n_candidates uniform draws from delta-ball
    Minibatch,          // subsampled Huber gradient error (Huber only)
    Sum,
  };

  Kind kind = Kind::Zero;
  double sigma2 = 0;                          // IsotropicGaussian
  double sigma2_tilde = 0;                    // BiasedGaussian
  std::vector<Vector<double>> bias_sequence;  // BiasedGaussian, cycled over k
  double M = 0;                               // BiasedGaussian norm bound
  double c0_bar = 1.0;                        // Remark-2.2 constant for proxy
  double delta = 0;                           // AdversarialBall radius
  int n_candidates = 0;                       // AdversarialBall
  Eigen::Index batch_size = 0;                // Minibatch
  Eigen::Index dim = 0;                       // Gaussian variants
  std::vector<NoiseModel> parts;              // Sum

  static NoiseModel zero() { return NoiseModel{}; }

  static NoiseModel isotropic_gaussian(double sigma2, Eigen::Index d) {
    if (!(sigma2 >= 0)) throw ValidationError("noise: sigma2 must be >= 0");
    if (d <= 0) throw ValidationError("noise: dimension must be > 0");
    NoiseModel m;
    m.kind = Kind::IsotropicGaussian;
    m.sigma2 = sigma2;
    m.dim = d;
    return m;
  }

  static NoiseModel biased_gaussian(double sigma2_tilde,
                                    std::vector<Vector<double>> bias_sequence,
                                    double M) {
    if (!(sigma2_tilde >= 0))
      throw ValidationError("noise: sigma2_tilde must be >= 0");
    if (bias_sequence.empty())
      throw ValidationError("noise: bias sequence must be non-empty");
    if (!(M >= 0)) throw ValidationError("noise: M must be >= 0");
    const Eigen::Index d = bias_sequence.front().size();
    for (const auto& b : bias_sequence) {
      if (b.size() != d)
        throw ValidationError("noise: inconsistent bias dimensions");
      if (b.norm() > M * (1.0 + 1e-12) + 1e-300)
        throw ValidationError("noise: bias norm exceeds M");
    }
    NoiseModel m;
    m.kind = Kind::BiasedGaussian;
    m.sigma2_tilde = sigma2_tilde;
    m.bias_sequence = std::move(bias_sequence);
    m.M = M;
    m.dim = d;
    return m;
  }

  static NoiseModel adversarial_ball(double delta, int n_candidates) {
    if (!(delta >= 0)) throw ValidationError("noise: delta must be >= 0");
    if (n_candidates <= 0)
      throw ValidationError("noise: n_candidates must be > 0");
    NoiseModel m;
    m.kind = Kind::AdversarialBall;
    m.delta = delta;
    m.n_candidates = n_candidates;
    return m;
  }

  static NoiseModel minibatch(Eigen::Index batch_size) {
    if (batch_size <= 0)
      throw ValidationError("noise: batch_size must be > 0");
    NoiseModel m;
    m.kind = Kind::Minibatch;
    m.batch_size = batch_size;
    return m;
  }

  static NoiseModel sum(std::vector<NoiseModel> parts) {
    if (parts.empty()) throw ValidationError("noise: empty sum");
    NoiseModel m;
    m.kind = Kind::Sum;
    m.parts = std::move(parts);
    return m;
  }

  bool contains(Kind k) const {
    if (kind == k) return true;
    for (const auto& p : parts)
      if (p.contains(k)) return true;
    return false;
  }
};

// Per-sample context.  `suboptimality_with_noise` maps a *total* gradient
// error to the resulting next-step suboptimality f(x_{k+1}) - f*; the
// adversarial model scores each candidate on top of whatever error the
// preceding summands already contributed.
struct SampleContext {
  const Vector<double>* y = nullptr;             // query point
  std::int64_t k = 0;                            // step index (bias cycling)
  const HuberProblem<double>* huber = nullptr;   // Minibatch
  std::function<double(const Vector<double>&)> suboptimality_with_noise;
  // Optional vectorized scorer: given total-error candidates as columns,
  // writes one suboptimality per column.  Must agree with the scalar
  // evaluator; it only changes how the argmax is computed, not which
  // candidate wins.
  std::function<void(const Matrix<double>&, Vector<double>&)>
      batch_suboptimality_with_noise;
};

namespace detail {

inline void sample_noise_into(const NoiseModel& m, CounterRng& rng,
                              const SampleContext& ctx, Vector<double>& acc) {
  switch (m.kind) {
    case NoiseModel::Kind::Zero:
      return;
    case NoiseModel::Kind::IsotropicGaussian: {
      if (m.dim != acc.size())
        throw ValidationError("noise: gaussian dimension mismatch");
      Vector<double> w(acc.size());
      rng.gaussian_fill(w, std::sqrt(m.sigma2 / double(m.dim)));
      acc += w;
      return;
    }
    case NoiseModel::Kind::BiasedGaussian: {
      if (m.dim != acc.size())
        throw ValidationError("noise: biased-gaussian dimension mismatch");
      Vector<double> w(acc.size());
      rng.gaussian_fill(w, std::sqrt(m.sigma2_tilde / double(m.dim)));
      acc += w;
      const auto n = static_cast<std::int64_t>(m.bias_sequence.size());
      const std::int64_t idx = ((ctx.k % n) + n) % n;
      acc += m.bias_sequence[static_cast<std::size_t>(idx)];
      return;
    }
    case NoiseModel::Kind::AdversarialBall: {
      if (!ctx.suboptimality_with_noise && !ctx.batch_suboptimality_with_noise)
        throw ValidationError(
            "noise: adversarial model requires a candidate evaluator");
      // Candidates are drawn in a fixed order so that the batched scorer
      // reproduces the sequential implementation draw for draw; strict >
      // keeps the first maximizer in both.
      if (ctx.batch_suboptimality_with_noise) {
        Matrix<double> cands(acc.size(), m.n_candidates);
        Vector<double> col(acc.size());
        for (int t = 0; t < m.n_candidates; ++t) {
          rng.ball_fill(col, m.delta);
          cands.col(t) = col;
        }
        Matrix<double> totals = cands.colwise() + acc;
        Vector<double> scores(m.n_candidates);
        ctx.batch_suboptimality_with_noise(totals, scores);
        int best_t = 0;
        for (int t = 1; t < m.n_candidates; ++t)
          if (scores(t) > scores(best_t)) best_t = t;
        acc += cands.col(best_t);
        return;
      }
      Vector<double> cand(acc.size());
      Vector<double> best(acc.size());
      double best_val = -std::numeric_limits<double>::infinity();
      for (int t = 0; t < m.n_candidates; ++t) {
        rng.ball_fill(cand, m.delta);
        const double v = ctx.suboptimality_with_noise(acc + cand);
        if (v > best_val) {
          best_val = v;
          best = cand;
        }
      }
      acc += best;
      return;
    }
    case NoiseModel::Kind::Minibatch: {
      if (ctx.huber == nullptr || ctx.y == nullptr)
        throw ValidationError(
            "noise: minibatch model requires a Huber problem and query point");
      acc += ctx.huber->minibatch_gradient(*ctx.y, m.batch_size, rng) -
             ctx.huber->gradient(*ctx.y);
      return;
    }
    case NoiseModel::Kind::Sum: {
      for (const auto& p : m.parts) sample_noise_into(p, rng, ctx, acc);
      return;
    }
  }
  throw ValidationError("noise: unknown model kind");
}

}  // namespace detail

inline Vector<double> sample_noise(const NoiseModel& m, CounterRng& rng,
                                   const SampleContext& ctx,
                                   Eigen::Index d) {
  if (d <= 0) throw ValidationError("noise: dimension must be > 0");
  Vector<double> acc = Vector<double>::Zero(d);
  detail::sample_noise_into(m, rng, ctx, acc);
  return acc;
}

// ---------------------------------------------------------------------------
// Variance proxy sigma^2.
//
// Analytic values where the model pins them down:
//   Gaussian: sigma2.  Biased Gaussian: c0_bar (sigma2_tilde + M^2) per
//   Remark 2.2.  Adversarial ball alone: delta^2 (pure bias, M = delta).
//   Sums combine additively; minibatch needs empirical estimation.
// ---------------------------------------------------------------------------

inline std::optional<double> sigma2_proxy_analytic(const NoiseModel& m) {
  switch (m.kind) {
    case NoiseModel::Kind::Zero:
      return 0.0;
    case NoiseModel::Kind::IsotropicGaussian:
      return m.sigma2;
    case NoiseModel::Kind::BiasedGaussian:
      return m.c0_bar * (m.sigma2_tilde + m.M * m.M);
    case NoiseModel::Kind::AdversarialBall:
      return m.delta * m.delta;
    case NoiseModel::Kind::Minibatch:
      return std::nullopt;
    case NoiseModel::Kind::Sum: {
      double s = 0;
      for (const auto& p : m.parts) {
        const auto v = sigma2_proxy_analytic(p);
        if (!v) return std::nullopt;
        s += *v;
      }
      return s;
    }
  }
  return std::nullopt;
}

// Splits a model into its evaluator-free stochastic portion (estimable along
// a reference trajectory) and the additive delta^2 contribution of any
// adversarial parts.
inline std::pair<NoiseModel, double> split_adversarial(const NoiseModel& m) {
  if (m.kind == NoiseModel::Kind::AdversarialBall)
    return {NoiseModel::zero(), m.delta * m.delta};
  if (m.kind != NoiseModel::Kind::Sum) return {m, 0.0};
  std::vector<NoiseModel> keep;
  double extra = 0;
  for (const auto& p : m.parts) {
    auto [sub, d2] = split_adversarial(p);
    extra += d2;
    if (sub.kind != NoiseModel::Kind::Zero) keep.push_back(std::move(sub));
  }
  if (keep.empty()) return {NoiseModel::zero(), extra};
  if (keep.size() == 1) return {keep.front(), extra};
  return {NoiseModel::sum(std::move(keep)), extra};
}

struct VarianceProxyEstimate {
  double sigma2_hat = 0;
  int samples_per_point = 0;
  std::size_t points_used = 0;
};

// sigma2_hat = 1/4 max_k Var(||gradient estimate at y_k||), estimated over
// `samples_per_point` draws at each trajectory point.  The model must be
// evaluator-free (no adversarial part); adversarial bias enters the proxy
// through split_adversarial instead.
template <typename Problem>
VarianceProxyEstimate estimate_variance_proxy(
    const NoiseModel& model, const Problem& problem,
    const std::vector<Vector<double>>& trajectory_points,
    int samples_per_point, CounterRng& rng) {
  if (trajectory_points.empty())
    throw ValidationError("variance proxy: empty trajectory");
  if (samples_per_point < 2)
    throw ValidationError("variance proxy: need at least 2 samples per point");
  if (model.contains(NoiseModel::Kind::AdversarialBall))
    throw ValidationError(
        "variance proxy: adversarial part must be split off first");

  VarianceProxyEstimate out;
  out.samples_per_point = samples_per_point;
  out.points_used = trajectory_points.size();
  double max_var = 0;
  for (std::size_t k = 0; k < trajectory_points.size(); ++k) {
    const Vector<double>& y = trajectory_points[k];
    const Vector<double> grad = problem.gradient(y);
    SampleContext ctx;
    ctx.y = &y;
    ctx.k = static_cast<std::int64_t>(k);
    if constexpr (std::is_same_v<Problem, HuberProblem<double>>)
      ctx.huber = &problem;
    double sum = 0, sumsq = 0;
    for (int s = 0; s < samples_per_point; ++s) {
      const double norm =
          (grad + sample_noise(model, rng, ctx, y.size())).norm();
      sum += norm;
      sumsq += norm * norm;
    }
    const double n = samples_per_point;
    const double var = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
    max_var = std::max(max_var, var);
  }
  out.sigma2_hat = 0.25 * max_var;
  return out;
}

// ---------------------------------------------------------------------------
// Sub-gaussian MGF check: for 0 <= t < 1,  E exp(t ||w||^2 / (2 sigma^2))
// <= (1+t)/(1-t).  Empirical mean compared against the bound with a 3-sigma
// Monte Carlo allowance.
// ---------------------------------------------------------------------------

struct MgfCheck {
  double empirical_mgf = 0;
  double bound = 0;
  double rel_error = 0;  // Monte Carlo relative standard error
  bool pass = false;
};

inline MgfCheck mgf_bound_check(const NoiseModel& m, double t,
                                std::int64_t n_samples, CounterRng& rng,
                                double sigma2, Eigen::Index d) {
  if (!(t >= 0) || t >= 1)
    throw ValidationError("mgf check: t must lie in [0, 1)");
  if (n_samples <= 1) throw ValidationError("mgf check: need n_samples > 1");
  if (!(sigma2 > 0)) throw ValidationError("mgf check: sigma2 must be > 0");
  double sum = 0, sumsq = 0;
  const Vector<double> y = Vector<double>::Zero(d);
  for (std::int64_t i = 0; i < n_samples; ++i) {
    SampleContext ctx;
    ctx.y = &y;
    ctx.k = i;
    const Vector<double> w = sample_noise(m, rng, ctx, d);
    const double v = std::exp(t * w.squaredNorm() / (2.0 * sigma2));
    sum += v;
    sumsq += v * v;
  }
  MgfCheck out;
  const double n = double(n_samples);
  out.empirical_mgf = sum / n;
  out.bound = (1.0 + t) / (1.0 - t);
  const double var = std::max(0.0, (sumsq - sum * sum / n) / (n - 1.0));
  out.rel_error = std::sqrt(var / n) / out.empirical_mgf;
  out.pass = out.empirical_mgf <= out.bound * (1.0 + 3.0 * out.rel_error);
  return out;
}

inline MgfCheck mgf_bound_check(const NoiseModel& m, double t,
                                std::int64_t n_samples, CounterRng& rng) {
  const auto s2 = sigma2_proxy_analytic(m);
  if (!s2 || !(*s2 > 0))
    throw ValidationError("mgf check: model has no analytic sigma2; pass one");
  Eigen::Index d = m.dim;
  if (d <= 0) throw ValidationError("mgf check: model has no intrinsic dim");
  return mgf_bound_check(m, t, n_samples, rng, *s2, d);
}

}  // namespace rsopt
