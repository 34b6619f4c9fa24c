#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "oracles.hpp"
#include "rsopt/montecarlo.hpp"
#include "rsopt/types.hpp"

using namespace rsopt;

namespace {

PathEnsemble synthetic_ensemble() {
  // Three paths, two recorded iterations (k = 0 and K = 4), third diverged.
  PathEnsemble ens;
  ens.n_paths = 3;
  ens.K = 4;
  ens.ks = {0, 4};
  const double nan = std::numeric_limits<double>::quiet_NaN();
  ens.subopt.resize(3, 2);
  ens.cum_subopt.resize(3, 2);
  ens.avg_iter_subopt.resize(3, 2);
  ens.subopt << 1.0, 0.2, 1.0, 0.6, 1.0, nan;
  ens.cum_subopt << 1.0, 2.5, 1.0, 4.0, 1.0, nan;
  ens.avg_iter_subopt << 1.0, 0.3, 1.0, 0.5, 1.0, nan;
  ens.averaged_subopt = {0.3, 0.5, nan};
  ens.diverged = {0, 0, 1};
  ens.n_diverged = 1;
  return ens;
}

}  // namespace

TEST_CASE("scalar fast path agrees with the generic loop") {
  Matrix<double> Q(1, 1);
  Q << 2.0;
  Vector<double> g(1);
  g << 1.0;
  const QuadraticProblem<double> prob(Q, g);
  const GmmParams p{0.4, 0.2, 0.1};
  const auto noise = NoiseModel::isotropic_gaussian(1.0, 1);

  SimOptions fast;
  fast.record_every = 7;
  Vector<double> x0(1);
  x0 << 2.0;
  fast.x0 = x0;
  SimOptions slow = fast;
  slow.force_generic = true;

  const auto a = simulate(prob, p, noise, 500, 4, 99, fast);
  const auto b = simulate(prob, p, noise, 500, 4, 99, slow);
  REQUIRE(a.ks == b.ks);
  for (long path = 0; path < 4; ++path) {
    for (Eigen::Index c = 0; c < a.subopt.cols(); ++c) {
      CAPTURE(path);
      CAPTURE(c);
      CHECK(a.subopt(path, c) ==
            doctest::Approx(b.subopt(path, c)).epsilon(1e-12));
      CHECK(a.cum_subopt(path, c) ==
            doctest::Approx(b.cum_subopt(path, c)).epsilon(1e-12));
      CHECK(a.avg_iter_subopt(path, c) ==
            doctest::Approx(b.avg_iter_subopt(path, c)).epsilon(1e-10));
    }
  }
}

TEST_CASE("zero noise from the minimizer stays at zero") {
  Vector<double> evals(2);
  evals << 1.0, 3.0;
  const auto prob = QuadraticProblem<double>::from_eigenvalues(evals);
  const auto r = resolve_preset(PresetId::NagPop, 1.0, 3.0);
  const auto ens =
      simulate(prob, r.params, NoiseModel::zero(), 50, 2, 1, SimOptions{});
  CHECK(ens.subopt.maxCoeff() == 0.0);
  CHECK(ens.cum_subopt.maxCoeff() == 0.0);
  CHECK(ens.averaged_subopt[0] == 0.0);
  CHECK(ens.n_diverged == 0);
}

TEST_CASE("noiseless gradient descent decays mode by mode") {
  Vector<double> evals(2);
  evals << 1.0, 3.0;
  const auto prob = QuadraticProblem<double>::from_eigenvalues(evals);
  const double alpha = 1.0 / 3.0;
  SimOptions opt;
  Vector<double> x0(2);
  x0 << 2.0, -1.0;
  opt.x0 = x0;
  const auto ens = simulate(prob, GmmParams{alpha, 0.0, 0.0},
                            NoiseModel::zero(), 30, 1, 1, opt);
  // Diagonal Q: e_i(k) = (1 - alpha lambda_i)^k e_i(0) exactly; the second
  // mode is deadbeat, so only lambda = 1 survives past k = 0.
  for (std::size_t c = 0; c < ens.ks.size(); ++c) {
    const long k = ens.ks[c];
    double expect = 0;
    for (Eigen::Index i = 0; i < 2; ++i)
      expect += 0.5 * evals(i) *
                std::pow(1.0 - alpha * evals(i), 2.0 * double(k)) *
                x0(i) * x0(i);
    CHECK(ens.subopt(0, static_cast<Eigen::Index>(c)) ==
          doctest::Approx(expect).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("deadbeat suboptimality is chi-square distributed") {
  // alpha = lambda = 1 gives x_{k+1} = -w_{k+1}, so f(x_k) - f* ~ w^2/2 with
  // w ~ N(0, 1), iid across k.  Compare the empirical CDF on 10^5 samples.
  const auto prob =
      QuadraticProblem<double>::from_eigenvalues(Vector<double>::Ones(1));
  const auto ens = simulate(prob, GmmParams{1.0, 0.0, 0.0},
                            NoiseModel::isotropic_gaussian(1.0, 1), 1000, 100,
                            7, SimOptions{});
  std::vector<double> samples;
  samples.reserve(100000);
  for (long p = 0; p < 100; ++p)
    for (Eigen::Index c = 1; c < ens.subopt.cols(); ++c)
      samples.push_back(ens.subopt(p, c));
  std::sort(samples.begin(), samples.end());
  const double n = double(samples.size());
  double ks = 0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const double F = oracle::chi2_scaled_cdf(samples[i], 1.0);
    ks = std::max(ks, std::abs(double(i + 1) / n - F));
    ks = std::max(ks, std::abs(double(i) / n - F));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("hook sees the exact recursion") {
  CounterRng seeder(3, 9);
  Matrix<double> Q(2, 2);
  Q << 2.0, 0.4, 0.4, 1.0;
  Vector<double> g(2);
  g << 0.1, -0.3;
  const QuadraticProblem<double> prob(Q, g);
  const GmmParams p{0.25, 0.3, 0.2};
  Vector<double> x0(2);
  seeder.gaussian_fill(x0, 1.0);

  std::vector<Vector<double>> ws;
  double max_defect = 0;
  SimOptions opt;
  opt.x0 = x0;
  opt.hook = [&](long path, long k, const Vector<double>& xn,
                 const Vector<double>& x, const Vector<double>& xp,
                 const Vector<double>& w) {
    (void)path;
    (void)k;
    const Vector<double> y = x + p.nu * (x - xp);
    const Vector<double> expect =
        x - p.alpha * (prob.gradient(y) + w) + p.beta * (x - xp);
    max_defect = std::max(max_defect, (xn - expect).norm());
    ws.push_back(w);
  };
  const auto ens = simulate(prob, p, NoiseModel::isotropic_gaussian(0.5, 2),
                            3, 1, 11, opt);
  CHECK(max_defect < 1e-13);
  REQUIRE(ws.size() == 3);
  // Three steps against the hand-unrolled oracle, using the captured errors.
  const Vector<double> x3 = oracle::gmm_unroll3(p, Q, g, x0, ws);
  CHECK(prob.suboptimality(x3) ==
        doctest::Approx(ens.subopt(0, ens.col_of(3))).epsilon(1e-10));
}

TEST_CASE("strided recording reproduces the stride-1 run exactly") {
  const auto prob =
      QuadraticProblem<double>::from_eigenvalues(Vector<double>::Ones(1) * 2.0);
  const GmmParams p{0.3, 0.1, 0.1};
  const auto noise = NoiseModel::isotropic_gaussian(1.0, 1);
  SimOptions dense;
  Vector<double> x0(1);
  x0 << 1.0;
  dense.x0 = x0;
  SimOptions strided = dense;
  strided.record_every = 7;

  const auto a = simulate(prob, p, noise, 100, 3, 42, dense);
  const auto b = simulate(prob, p, noise, 100, 3, 42, strided);
  CHECK(b.ks.back() == 100);
  for (const long k : b.ks) {
    const auto ca = a.col_of(k), cb = b.col_of(k);
    for (long path = 0; path < 3; ++path) {
      CHECK(a.subopt(path, ca) == b.subopt(path, cb));
      CHECK(a.cum_subopt(path, ca) == b.cum_subopt(path, cb));
      CHECK(a.avg_iter_subopt(path, ca) == b.avg_iter_subopt(path, cb));
    }
  }
  CHECK_THROWS_AS(b.col_of(3), ValidationError);  // not recorded at stride 7

  // Same seed is bit-reproducible; a different seed is not.
  const auto a2 = simulate(prob, p, noise, 100, 3, 42, dense);
  CHECK((a.subopt - a2.subopt).norm() == 0.0);
  const auto a3 = simulate(prob, p, noise, 100, 3, 43, dense);
  CHECK((a.subopt - a3.subopt).norm() > 0.0);
}

TEST_CASE("running sums and Jensen ordering") {
  Vector<double> evals(2);
  evals << 1.0, 3.0;
  const auto prob = QuadraticProblem<double>::from_eigenvalues(evals);
  const auto r = resolve_preset(PresetId::GdPop, 1.0, 3.0);
  SimOptions opt;
  Vector<double> x0(2);
  x0 << 1.0, 1.0;
  opt.x0 = x0;
  const auto ens = simulate(prob, r.params, NoiseModel::isotropic_gaussian(
                                                0.5, 2),
                            200, 5, 3, opt);
  for (long path = 0; path < 5; ++path) {
    // S_k is the running sum of the recorded suboptimalities (stride 1).
    KahanSum s;
    for (std::size_t c = 0; c < ens.ks.size(); ++c) {
      s.add(ens.subopt(path, static_cast<Eigen::Index>(c)));
      CHECK(ens.cum_subopt(path, static_cast<Eigen::Index>(c)) ==
            doctest::Approx(s.s).epsilon(1e-12));
    }
    // f(x-bar_K) - f* <= S_K/(K+1) by convexity.
    const Eigen::Index last = ens.subopt.cols() - 1;
    CHECK(ens.avg_iter_subopt(path, last) <=
          ens.cum_subopt(path, last) / 201.0 + 1e-12);
    CHECK(ens.averaged_subopt[std::size_t(path)] ==
          ens.avg_iter_subopt(path, last));
  }
}

TEST_CASE("divergence is detected, flagged, and excluded") {
  const auto prob =
      QuadraticProblem<double>::from_eigenvalues(Vector<double>::Ones(1));
  SimOptions opt;
  Vector<double> x0(1);
  x0 << 1.0;
  opt.x0 = x0;
  // alpha = 10 on lambda = 1: |1 - alpha lambda| = 9, blows past 1e30.
  const auto ens = simulate(prob, GmmParams{10.0, 0.0, 0.0},
                            NoiseModel::zero(), 100, 2, 5, opt);
  CHECK(ens.n_diverged == 2);
  CHECK(std::isnan(ens.subopt(0, ens.subopt.cols() - 1)));
  CHECK(std::isnan(ens.averaged_subopt[0]));
  CHECK_THROWS_AS(empirical_risk(ens, 0.5, 1.0), NumericalError);
}

TEST_CASE("empirical risk on a hand-built ensemble") {
  const auto ens = synthetic_ensemble();

  SUBCASE("theta = 0 is the mean of S_K/(K+1)") {
    const auto er = empirical_risk(ens, 0.0, 0.0);
    CHECK(er.n_used == 2);
    CHECK(er.n_excluded == 1);
    CHECK(er.values[1] ==
          doctest::Approx((2.5 / 5.0 + 4.0 / 5.0) / 2.0).epsilon(1e-15));
    CHECK(er.ess[1] == 2.0);
    REQUIRE(er.warnings.size() >= 1);
    CHECK(er.warnings[0].find("diverged") != std::string::npos);
  }

  SUBCASE("positive theta reproduces a direct log-sum-exp") {
    const double theta = 0.5, s2 = 1.0;
    const auto er = empirical_risk(ens, theta, s2);
    const double scale = theta / (2.0 * s2);
    const double direct =
        (std::log((std::exp(scale * 2.5) + std::exp(scale * 4.0)) / 2.0)) /
        (scale * 5.0);
    CHECK(er.values[1] == doctest::Approx(direct).epsilon(1e-13));
    // Monotone in theta.
    CHECK(empirical_risk(ens, 1.0, s2).values[1] >= er.values[1]);
    CHECK(er.values[1] >= empirical_risk(ens, 0.0, 0.0).values[1]);
  }

  SUBCASE("negative theta carries the exclusion-bias warning") {
    const auto er = empirical_risk(ens, -0.5, 1.0);
    REQUIRE(!er.warnings.empty());
    CHECK(er.warnings[0].find("risk-seeking") != std::string::npos);
  }

  SUBCASE("validation") {
    CHECK_THROWS_AS(empirical_risk(ens, 0.5, 0.0), ValidationError);
  }
}

TEST_CASE("single-path risk reduces to the time average at any theta") {
  PathEnsemble ens;
  ens.n_paths = 1;
  ens.K = 9;
  ens.ks = {9};
  ens.subopt.resize(1, 1);
  ens.cum_subopt.resize(1, 1);
  ens.avg_iter_subopt.resize(1, 1);
  ens.subopt << 0.3;
  ens.cum_subopt << 7.0;
  ens.avg_iter_subopt << 0.2;
  ens.averaged_subopt = {0.2};
  ens.diverged = {0};
  for (const double theta : {0.0, 0.4, 2.0}) {
    CAPTURE(theta);
    CHECK(empirical_risk(ens, theta, 1.0).values[0] ==
          doctest::Approx(0.7).epsilon(1e-13));
  }
}

TEST_CASE("ESS warning fires when the tilt concentrates") {
  // Deadbeat scalar chain: large theta tilts the weight onto a single path.
  const auto prob =
      QuadraticProblem<double>::from_eigenvalues(Vector<double>::Ones(1));
  const auto ens = simulate(prob, GmmParams{1.0, 0.0, 0.0},
                            NoiseModel::isotropic_gaussian(1.0, 1), 50, 200,
                            21, SimOptions{});
  const auto er = empirical_risk(ens, 1.8, 1.0);
  CHECK(er.ess.back() < 100.0);
  bool saw = false;
  for (const auto& w : er.warnings)
    if (w.find("effective sample size") != std::string::npos) saw = true;
  CHECK(saw);
}

TEST_CASE("empirical tails") {
  const auto ens = synthetic_ensemble();
  const auto at0 = empirical_tail(ens, 0.0);
  CHECK(at0.frac_time_avg == 1.0);
  CHECK(at0.frac_avg_iterate == 1.0);
  // S_K/(K+1) = {0.5, 0.8}; the diverged path always counts.
  const auto mid = empirical_tail(ens, 0.6);
  CHECK(mid.frac_time_avg == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(mid.frac_avg_iterate == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  const auto high = empirical_tail(ens, 100.0);
  CHECK(high.frac_time_avg == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(empirical_tail(ens, -1.0), ValidationError);
}

TEST_CASE("frontier extraction keeps strict improvements in rho order") {
  std::vector<SweepPoint> pts(5);
  pts[0] = {0.10, 0.0, 0.5, Extd(2.0)};
  pts[1] = {0.20, 0.0, 0.6, Extd(1.0)};
  pts[2] = {0.30, 0.0, 0.7, Extd(3.0)};
  pts[3] = {0.40, 0.0, 0.9, Extd(0.5)};
  pts[4] = {0.50, 0.0, 1.2, Extd(0.1)};  // unstable: excluded
  const auto f = extract_frontier(pts);
  REQUIRE(f.size() == 3);
  CHECK(f[0] == 0);
  CHECK(f[1] == 1);
  CHECK(f[2] == 3);
}

TEST_CASE("pareto sweep on a small grid") {
  Vector<double> evals(2);
  evals << 1.0, 3.0;
  const auto prob = QuadraticProblem<double>::from_eigenvalues(evals);
  const double theta = 0.2, sigma2 = 2.0;

  SweepGrid grid;
  grid.n_alpha = 40;
  const auto gd = pareto_sweep(prob, SweepMethod::Gd, grid, theta, sigma2);
  CHECK(gd.points.size() == 40);
  REQUIRE(!gd.frontier.empty());
  // Frontier is rho-ascending with strictly decreasing R.
  for (std::size_t i = 0; i + 1 < gd.frontier.size(); ++i) {
    CHECK(gd.points[gd.frontier[i]].rho < gd.points[gd.frontier[i + 1]].rho);
    CHECK(gd.points[gd.frontier[i + 1]].R < gd.points[gd.frontier[i]].R);
  }
  // Spot-check sweep values against the Riccati evaluator.
  int checked = 0;
  for (const auto& pt : gd.points) {
    if (!pt.R.is_finite() || checked >= 5) continue;
    const GmmParams p{pt.alpha, pt.beta, 0.0};
    const Extd direct = risk_index_riccati(prob, p, theta, sigma2);
    CHECK(pt.R.value() == doctest::Approx(direct.value()).epsilon(1e-9));
    ++checked;
  }
  CHECK(checked == 5);

  SweepGrid mgrid;
  mgrid.n_alpha = 12;
  mgrid.n_beta = 12;
  const auto nag = pareto_sweep(prob, SweepMethod::Nag, mgrid, theta, sigma2);
  CHECK(nag.points.size() == 144);
  REQUIRE(!nag.frontier.empty());
  bool any_finite = false;
  for (const auto& pt : nag.points) {
    if (pt.R.is_finite()) {
      any_finite = true;
      const GmmParams p{pt.alpha, pt.beta, pt.beta};  // nu = beta for NAG
      const Extd direct = risk_index_riccati(prob, p, theta, sigma2);
      CHECK(pt.R.value() == doctest::Approx(direct.value()).epsilon(1e-8));
      break;
    }
  }
  CHECK(any_finite);

  CHECK_THROWS_AS(pareto_sweep(prob, SweepMethod::Gd, grid, 0.0, sigma2),
                  ValidationError);
  CHECK_THROWS_AS(parse_sweep_method("adam"), ValidationError);
  CHECK(parse_sweep_method("hb") == SweepMethod::Hb);
}

TEST_CASE("reference trajectory follows the noiseless recursion") {
  Vector<double> evals(2);
  evals << 1.0, 3.0;
  const auto prob = QuadraticProblem<double>::from_eigenvalues(evals);
  const auto r = resolve_preset(PresetId::NagPop, 1.0, 3.0);
  Vector<double> x0(2);
  x0 << 1.0, -2.0;
  const auto ys = reference_trajectory(prob, r.params, x0, 5);
  REQUIRE(ys.size() == 5);
  CHECK((ys[0] - x0).norm() == 0.0);  // x_{-1} = x_0 makes y_0 = x_0
  Vector<double> x = x0, xp = x0;
  for (const auto& y : ys) {
    CHECK((y - (x + r.params.nu * (x - xp))).norm() < 1e-14);
    const Vector<double> xn =
        x - r.params.alpha * prob.gradient(y) + r.params.beta * (x - xp);
    xp = x;
    x = xn;
  }
  CHECK_THROWS_AS(reference_trajectory(prob, r.params, x0, 0),
                  ValidationError);
}
