// rsopt: risk-sensitive analysis of generalized momentum methods.
//
// Subcommands: hinf, risk-index, rate-function, bound, simulate, pareto,
// experiment-6.  Every run writes CSVs plus a meta.json (seed, canonical
// config, hash, versions) into --out; re-runs with the same flags are
// byte-identical.  Exit codes: 0 ok, 2 validation error, 3 numerical error.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <system_error>
#include <vector>

#include "CLI11.hpp"

#include "rsopt/dare.hpp"
#include "rsopt/gmm.hpp"
#include "rsopt/montecarlo.hpp"
#include "rsopt/noise.hpp"
#include "rsopt/problems.hpp"
#include "rsopt/risk_bounds.hpp"
#include "rsopt/risk_exact.hpp"
#include "rsopt/types.hpp"

#include "config.hpp"
#include "csv.hpp"
#include "meta.hpp"

namespace fs = std::filesystem;
using namespace rsopt;

namespace {

// Removes the files a failed run already created.
struct OutputGuard {
  std::vector<std::string> paths;
  bool committed = false;

  std::string track(std::string p) {
    paths.push_back(std::move(p));
    return paths.back();
  }
  void commit() { committed = true; }
  ~OutputGuard() {
    if (committed) return;
    for (const auto& p : paths) {
      std::error_code ec;
      fs::remove(p, ec);
    }
  }
};

// Canonical config serialization (deterministic, hashed into meta.json).
struct ConfigString {
  std::string s;
  void add(const std::string& k, const std::string& v) {
    if (!s.empty()) s += ';';
    s += k + '=' + v;
  }
  void add(const std::string& k, double v) { add(k, format_double(v)); }
  void add(const std::string& k, long v) { add(k, std::to_string(v)); }
};

// ---------------------------------------------------------------------------
// Shared flag bundles.
// ---------------------------------------------------------------------------

struct ProblemFlags {
  std::string eigenvalues;
  double mu = 1.0, L = 3.0;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--eigenvalues", eigenvalues,
                    "Comma-separated Hessian spectrum (overrides --mu/--L)");
    cmd->add_option("--mu", mu, "Strong convexity constant (default 1)");
    cmd->add_option("--L", L, "Smoothness constant (default 3)");
  }

  QuadraticProblem<double> make() const {
    if (!eigenvalues.empty())
      return QuadraticProblem<double>::from_eigenvalues(
          parse_eigenvalue_list(eigenvalues));
    if (!(mu > 0) || !(L >= mu))
      throw ValidationError("need 0 < mu <= L");
    Vector<double> ev(2);
    ev << mu, L;
    return QuadraticProblem<double>::from_eigenvalues(ev);
  }

  void describe(ConfigString& cfg) const {
    if (!eigenvalues.empty())
      cfg.add("eigenvalues", eigenvalues);
    else {
      cfg.add("mu", mu);
      cfg.add("L", L);
    }
  }
};

struct MethodFlags {
  std::string preset;
  double alpha = 0, beta = 0, nu = 0;
  double rs_hb_a = std::sqrt(2.0);
  CLI::Option* alpha_opt = nullptr;
  CLI::Option* beta_opt = nullptr;
  CLI::Option* nu_opt = nullptr;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--preset", preset,
                    "gd-pop|gd-fastest|rs-gd|nag-pop|nag-fastest|"
                    "nag-beta-opt|tmm|hb|rs-hb|all");
    alpha_opt = cmd->add_option("--alpha", alpha, "Step size");
    beta_opt = cmd->add_option("--beta", beta, "Momentum coefficient");
    nu_opt = cmd->add_option("--nu", nu, "Extrapolation coefficient");
    cmd->add_option("--rs-hb-a", rs_hb_a,
                    "rs-hb tuning constant a (default sqrt(2))");
  }

  bool alpha_set() const { return alpha_opt && alpha_opt->count() > 0; }
  bool custom() const {
    return preset.empty() && alpha_set();
  }

  struct Method {
    std::string name;
    GmmParams params;
  };

  // Resolves to one or more named parameterizations.  `all_if_empty`
  // controls the no-flag default: the full preset table (hinf) or gd-pop.
  std::vector<Method> resolve(double mu, double L, bool all_if_empty) const {
    std::vector<Method> out;
    if (custom()) {
      if (!preset.empty())
        throw ValidationError("--alpha with --preset is only valid for "
                              "nag-beta-opt");
      GmmParams p{alpha, beta, nu};
      p.validate();
      out.push_back({"custom", p});
      return out;
    }
    if ((beta_opt && beta_opt->count()) || (nu_opt && nu_opt->count()))
      throw ValidationError(
          "--beta/--nu require --alpha (custom parameters)");
    PresetOptions opt;
    opt.rs_hb_a = rs_hb_a;
    std::vector<PresetId> ids;
    if (preset.empty() || preset == "all") {
      if (preset.empty() && !all_if_empty)
        ids.push_back(PresetId::GdPop);
      else
        ids = {PresetId::GdPop,     PresetId::GdFastest,
               PresetId::RsGd,      PresetId::NagPop,
               PresetId::NagFastest, PresetId::NagBetaOpt,
               PresetId::Tmm,       PresetId::Hb,
               PresetId::RsHb};
    } else {
      ids.push_back(parse_preset(preset));
    }
    if (alpha_set()) {
      if (ids.size() != 1 || ids[0] != PresetId::NagBetaOpt)
        throw ValidationError("--alpha with --preset is only valid for "
                              "nag-beta-opt");
      opt.alpha = alpha;
    }
    for (const PresetId id : ids) {
      const ResolvedPreset r = resolve_preset(id, mu, L, opt);
      out.push_back({r.name, r.params});
    }
    return out;
  }

  void describe(ConfigString& cfg) const {
    if (custom()) {
      cfg.add("alpha", alpha);
      cfg.add("beta", beta);
      cfg.add("nu", nu);
    } else {
      cfg.add("preset", preset.empty() ? std::string("default") : preset);
      if (alpha_set()) cfg.add("alpha", alpha);
    }
  }
};

double resolve_sigma2(const CLI::Option* sigma2_opt, double sigma2,
                      const std::string& noise_spec, Eigen::Index d) {
  if (sigma2_opt && sigma2_opt->count()) return sigma2;
  if (!noise_spec.empty()) {
    const NoiseModel m = parse_noise_spec(noise_spec, d);
    if (const auto v = sigma2_proxy_analytic(m)) return *v;
    throw ValidationError(
        "noise model has no analytic variance proxy; pass --sigma2");
  }
  return 1.0;
}

std::string prepare_out_dir(const std::string& out) {
  fs::create_directories(out.empty() ? "." : out);
  return out.empty() ? "." : out;
}

// ---------------------------------------------------------------------------
// hinf
// ---------------------------------------------------------------------------

int cmd_hinf(const std::string& out_dir, const ProblemFlags& pf,
             const MethodFlags& mf, std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const double mu = prob.mu(), L = prob.L();
  const auto methods = mf.resolve(mu, L, /*all_if_empty=*/true);

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter csv(guard.track(dir + "/hinf.csv"),
                {"method", "alpha", "beta", "nu", "rho", "gain_mu", "gain_L",
                 "h_inf"});
  for (const auto& m : methods) {
    const double rho = quadratic_rate(m.params, prob.eigenvalues);
    const ModeGain gm = mode_gain(m.params, mu);
    const ModeGain gl = mode_gain(m.params, L);
    csv.cell(m.name);
    csv.cell(m.params.alpha);
    csv.cell(m.params.beta);
    csv.cell(m.params.nu);
    csv.cell(rho);
    csv.cell(gm.gain);
    csv.cell(gl.gain);
    csv.cell(h_infinity_spectrum(m.params, prob.eigenvalues));
    csv.end_row();
  }
  csv.close();

  ConfigString cfg;
  cfg.add("cmd", "hinf");
  pf.describe(cfg);
  mf.describe(cfg);
  RunMeta meta{"hinf", seed, cfg.s, {}};
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// risk-index
// ---------------------------------------------------------------------------

int cmd_risk_index(const std::string& out_dir, const ProblemFlags& pf,
                   const MethodFlags& mf, const CLI::Option* sigma2_opt,
                   double sigma2_flag, const std::string& noise_spec,
                   const CLI::Option* theta_opt, double theta,
                   const std::string& theta_grid, std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const auto methods = mf.resolve(prob.mu(), prob.L(), false);
  if (methods.size() != 1)
    throw ValidationError("risk-index: pick one method (preset or custom)");
  const double sigma2 =
      resolve_sigma2(sigma2_opt, sigma2_flag, noise_spec, prob.dim());

  RiskEvaluator ev =
      RiskEvaluator::for_problem(prob, methods[0].params, sigma2);
  std::vector<double> grid;
  if (theta_opt && theta_opt->count())
    grid.push_back(theta);
  else if (!theta_grid.empty())
    grid = parse_theta_grid(theta_grid);
  else
    grid = default_theta_grid(ev.theta_star());

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter csv(guard.track(dir + "/risk_index.csv"),
                {"theta", "R_riccati", "R_integral", "finite_flag"});
  for (const double th : grid) {
    const Extd integral = ev.integral(th);
    csv.cell(th);
    // The Riccati route is defined for theta > 0 only; other cells are nan.
    if (th > 0)
      csv.cell(ev.riccati(th));
    else
      csv.cell(std::string("nan"));
    csv.cell(integral);
    csv.cell(long(integral.is_finite() ? 1 : 0));
    csv.end_row();
  }
  csv.close();

  ConfigString cfg;
  cfg.add("cmd", "risk-index");
  pf.describe(cfg);
  mf.describe(cfg);
  cfg.add("sigma2", sigma2);
  if (theta_opt && theta_opt->count())
    cfg.add("theta", theta);
  else
    cfg.add("theta_grid", theta_grid.empty() ? "auto" : theta_grid);
  RunMeta meta{"risk-index", seed, cfg.s, {}};
  meta.stats.emplace_back("theta_star", format_double(ev.theta_star()));
  meta.stats.emplace_back("h_inf", format_double(ev.h_inf()));
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// rate-function
// ---------------------------------------------------------------------------

int cmd_rate_function(const std::string& out_dir, const ProblemFlags& pf,
                      const MethodFlags& mf, const CLI::Option* sigma2_opt,
                      double sigma2_flag, const std::string& noise_spec,
                      const std::string& s_grid_spec, std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const auto methods = mf.resolve(prob.mu(), prob.L(), false);
  if (methods.size() != 1)
    throw ValidationError("rate-function: pick one method");
  const double sigma2 =
      resolve_sigma2(sigma2_opt, sigma2_flag, noise_spec, prob.dim());

  std::vector<double> s_grid;
  if (!s_grid_spec.empty()) {
    s_grid = parse_theta_grid(s_grid_spec);
  } else {
    RiskEvaluator ev =
        RiskEvaluator::for_problem(prob, methods[0].params, sigma2);
    const double r0 = ev.integral(0.0).value();
    for (int i = 0; i <= 100; ++i)
      s_grid.push_back(10.0 * r0 * double(i) / 100.0);
  }

  const RateFunction rf =
      rate_function(prob, methods[0].params, sigma2, s_grid);

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter csv(guard.track(dir + "/rate_function.csv"),
                {"s", "I", "finite_flag"});
  for (std::size_t i = 0; i < rf.s_grid.size(); ++i) {
    csv.cell(rf.s_grid[i]);
    csv.cell(rf.I_values[i]);
    csv.cell(long(rf.I_values[i].is_finite() ? 1 : 0));
    csv.end_row();
  }
  csv.close();

  ConfigString cfg;
  cfg.add("cmd", "rate-function");
  pf.describe(cfg);
  mf.describe(cfg);
  cfg.add("sigma2", sigma2);
  cfg.add("s_grid", s_grid_spec.empty() ? "auto" : s_grid_spec);
  RunMeta meta{"rate-function", seed, cfg.s, {}};
  meta.stats.emplace_back("argmin_s", format_double(rf.argmin_s));
  meta.stats.emplace_back("h_inf", format_double(rf.H_inf));
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// bound
// ---------------------------------------------------------------------------

BoundCoefficients resolve_certificate(const std::string& cert,
                                      const GmmParams& p, double mu,
                                      double L) {
  if (cert == "gd-distance" || cert == "gd-function") {
    if (p.beta != 0.0 || p.nu != 0.0)
      throw ValidationError("GD certificates require beta = nu = 0");
    return certificate_gd(p.alpha, mu, L,
                          cert == "gd-distance" ? GdVariant::Distance
                                                : GdVariant::Function);
  }
  if (cert == "nag") return certificate_nag(p.alpha, mu, L);
  if (cert != "auto")
    throw ValidationError("unknown certificate '" + cert +
                          "' (expected auto|gd-distance|gd-function|nag)");
  if (p.beta == 0.0 && p.nu == 0.0) {
    const BoundCoefficients d =
        certificate_gd(p.alpha, mu, L, GdVariant::Distance);
    const BoundCoefficients f =
        certificate_gd(p.alpha, mu, L, GdVariant::Function);
    return d.H_bar_inf <= f.H_bar_inf ? d : f;
  }
  const double s = std::sqrt(p.alpha * mu);
  const double nag_beta = (1.0 - s) / (1.0 + s);
  if (std::abs(p.beta - p.nu) < 1e-12 &&
      std::abs(p.beta - nag_beta) < 1e-9)
    return certificate_nag(p.alpha, mu, L);
  throw ValidationError(
      "no certificate covers these parameters; supported families are GD "
      "(beta = nu = 0) and NAG (beta = nu = (1-sqrt(alpha mu))/"
      "(1+sqrt(alpha mu)))");
}

int cmd_bound(const std::string& out_dir, const ProblemFlags& pf,
              const MethodFlags& mf, const CLI::Option* sigma2_opt,
              double sigma2_flag, const std::string& noise_spec,
              const std::string& cert, const CLI::Option* theta_opt,
              double theta, const std::string& theta_grid, long K,
              const std::string& t_spec, std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const double mu = prob.mu(), L = prob.L();
  const auto methods = mf.resolve(mu, L, false);
  if (methods.size() != 1) throw ValidationError("bound: pick one method");
  const double sigma2 =
      resolve_sigma2(sigma2_opt, sigma2_flag, noise_spec, prob.dim());
  if (K < 1) throw ValidationError("bound: --K must be >= 1");

  BoundCoefficients bc =
      resolve_certificate(cert, methods[0].params, mu, L);
  bc = with_initial_state(bc, prob, Vector<double>::Zero(prob.dim()));
  const double h2 = sq(bc.H_bar_inf);

  std::vector<double> thetas;
  if (theta_opt && theta_opt->count())
    thetas.push_back(theta);
  else if (!theta_grid.empty())
    thetas = parse_theta_grid(theta_grid);
  else
    thetas = default_theta_grid(1.0 / h2);

  std::vector<double> ts;
  if (!t_spec.empty()) {
    ts = parse_theta_grid(t_spec);
  } else {
    // Default t range: twice the asymptotic theta = 0 level 4 sigma^2 Hbar^2.
    const double hi = 8.0 * sigma2 * h2;
    for (std::size_t i = 0; i < thetas.size(); ++i)
      ts.push_back(hi * double(i + 1) / double(thetas.size()));
  }

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter csv(guard.track(dir + "/bound.csv"),
                {"K", "theta", "R_bar_K", "R_bar_inf", "t", "I_bar_K",
                 "I_bar", "H_bar_inf", "cert"});
  const std::size_t rows = std::max(thetas.size(), ts.size());
  for (std::size_t i = 0; i < rows; ++i) {
    csv.cell(K);
    if (i < thetas.size()) {
      csv.cell(thetas[i]);
      csv.cell(risk_bound_finite(bc, thetas[i], K, sigma2, L));
      csv.cell(risk_bound_asymptotic(bc, thetas[i], sigma2));
    } else {
      csv.cell(std::string("nan"));
      csv.cell(std::string("nan"));
      csv.cell(std::string("nan"));
    }
    if (i < ts.size()) {
      csv.cell(ts[i]);
      csv.cell(ldp_exponent_finite(bc, K, ts[i], sigma2, L));
      csv.cell(ldp_bound_asymptotic(bc, ts[i], sigma2));
    } else {
      csv.cell(std::string("nan"));
      csv.cell(std::string("nan"));
      csv.cell(std::string("nan"));
    }
    csv.cell(bc.H_bar_inf);
    csv.cell(bc.provenance);
    csv.end_row();
  }
  csv.close();

  ConfigString cfg;
  cfg.add("cmd", "bound");
  pf.describe(cfg);
  mf.describe(cfg);
  cfg.add("sigma2", sigma2);
  cfg.add("cert", cert);
  cfg.add("K", K);
  RunMeta meta{"bound", seed, cfg.s, {}};
  meta.stats.emplace_back("H_bar_inf", format_double(bc.H_bar_inf));
  meta.stats.emplace_back("cert", bc.provenance);
  meta.stats.emplace_back("p", format_double(bc.p));
  meta.stats.emplace_back("q", format_double(bc.q));
  meta.stats.emplace_back("r", format_double(bc.r));
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

int cmd_simulate(const std::string& out_dir, const ProblemFlags& pf,
                 const MethodFlags& mf, const std::string& noise_spec,
                 const CLI::Option* sigma2_opt, double sigma2_flag,
                 double theta, long K, long n_paths, long record_every,
                 std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const auto methods = mf.resolve(prob.mu(), prob.L(), false);
  if (methods.size() != 1) throw ValidationError("simulate: pick one method");
  const std::string spec =
      noise_spec.empty() ? std::string("gaussian:sigma2=1") : noise_spec;
  const NoiseModel noise = parse_noise_spec(spec, prob.dim());
  if (noise.contains(NoiseModel::Kind::Minibatch))
    throw ValidationError(
        "minibatch noise needs the Huber pipeline; use experiment-6");
  const double sigma2_hat =
      resolve_sigma2(sigma2_opt, sigma2_flag, spec, prob.dim());

  SimOptions opt;
  opt.record_every = record_every > 0 ? record_every
                                      : std::max<long>(1, K / 1000);
  const PathEnsemble ens =
      simulate(prob, methods[0].params, noise, K, n_paths, seed, opt);
  const EmpiricalRisk er = empirical_risk(ens, theta, sigma2_hat);

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter paths_csv(guard.track(dir + "/paths.csv"),
                      {"k", "path", "subopt"});
  for (std::size_t c = 0; c < ens.ks.size(); ++c)
    for (long p = 0; p < ens.n_paths; ++p) {
      paths_csv.cell(ens.ks[c]);
      paths_csv.cell(p);
      paths_csv.cell(ens.subopt(p, static_cast<Eigen::Index>(c)));
      paths_csv.end_row();
    }
  paths_csv.close();

  CsvWriter risk_csv(guard.track(dir + "/risk_hat.csv"), {"k", "R_hat"});
  for (std::size_t c = 0; c < er.ks.size(); ++c) {
    risk_csv.cell(er.ks[c]);
    risk_csv.cell(er.values[c]);
    risk_csv.end_row();
  }
  risk_csv.close();

  ConfigString cfg;
  cfg.add("cmd", "simulate");
  pf.describe(cfg);
  mf.describe(cfg);
  cfg.add("noise", spec);
  cfg.add("theta", theta);
  cfg.add("K", K);
  cfg.add("paths", n_paths);
  cfg.add("record_every", opt.record_every);
  RunMeta meta{"simulate", seed, cfg.s, {}};
  meta.stats.emplace_back("sigma2_hat", format_double(sigma2_hat));
  meta.stats.emplace_back("n_diverged", std::to_string(ens.n_diverged));
  double min_ess = er.ess.empty() ? 0.0 : er.ess.front();
  for (const double e : er.ess) min_ess = std::min(min_ess, e);
  meta.stats.emplace_back("min_ess", format_double(min_ess));
  for (std::size_t i = 0; i < er.warnings.size(); ++i) {
    std::cerr << "warning: " << er.warnings[i] << "\n";
    meta.stats.emplace_back("warning_" + std::to_string(i), er.warnings[i]);
  }
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// pareto
// ---------------------------------------------------------------------------

int cmd_pareto(const std::string& out_dir, const ProblemFlags& pf,
               const std::string& method_str, double theta,
               const CLI::Option* sigma2_opt, double sigma2_flag,
               const std::string& noise_spec, long n_alpha, long n_beta,
               bool paper_scale, std::uint64_t seed) {
  const QuadraticProblem<double> prob = pf.make();
  const SweepMethod method = parse_sweep_method(method_str);
  const double sigma2 =
      resolve_sigma2(sigma2_opt, sigma2_flag, noise_spec, prob.dim());

  SweepGrid grid;
  grid.n_alpha = n_alpha;
  grid.n_beta = n_beta;
  grid.paper_scale = paper_scale;
  const ParetoResult res = pareto_sweep(prob, method, grid, theta, sigma2);

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  const std::vector<std::string> header = {"alpha", "beta", "rho", "R",
                                           "finite_flag"};
  auto write_point = [](CsvWriter& csv, const SweepPoint& pt) {
    csv.cell(pt.alpha);
    csv.cell(pt.beta);
    csv.cell(pt.rho);
    csv.cell(pt.R);
    csv.cell(long(pt.R.is_finite() ? 1 : 0));
    csv.end_row();
  };
  CsvWriter all_csv(guard.track(dir + "/pareto.csv"), header);
  for (const auto& pt : res.points) write_point(all_csv, pt);
  all_csv.close();
  CsvWriter front_csv(guard.track(dir + "/pareto_frontier.csv"), header);
  for (const auto i : res.frontier) write_point(front_csv, res.points[i]);
  front_csv.close();

  ConfigString cfg;
  cfg.add("cmd", "pareto");
  pf.describe(cfg);
  cfg.add("method", method_str);
  cfg.add("theta", theta);
  cfg.add("sigma2", sigma2);
  cfg.add("paper_scale", paper_scale ? "1" : "0");
  if (n_alpha > 0) cfg.add("n_alpha", n_alpha);
  if (n_beta > 0) cfg.add("n_beta", n_beta);
  RunMeta meta{"pareto", seed, cfg.s, {}};
  meta.stats.emplace_back("n_points", std::to_string(res.points.size()));
  meta.stats.emplace_back("n_frontier", std::to_string(res.frontier.size()));
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

// ---------------------------------------------------------------------------
// experiment-6: the Huber pipeline.
// ---------------------------------------------------------------------------

int cmd_experiment6(const std::string& out_dir, long K, long n_paths,
                    std::uint64_t seed) {
  const HuberProblem<double> prob =
      HuberProblem<double>::generate(10, 1000, 0.005, 20.0, 0.1, seed);
  const double mu = prob.mu(), L = prob.L();

  const std::vector<PresetId> presets = {PresetId::Hb, PresetId::RsHb,
                                         PresetId::GdPop,
                                         PresetId::NagBetaOpt, PresetId::Tmm};
  struct Pipeline {
    std::string name;
    NoiseModel model;
  };
  const std::vector<Pipeline> pipelines = {
      {"minibatch", NoiseModel::minibatch(64)},
      {"minibatch+adversarial",
       NoiseModel::sum({NoiseModel::minibatch(64),
                        NoiseModel::adversarial_ball(2.5, 50)})},
  };
  const std::vector<double> thetas = {0.001, 1000.0};

  OutputGuard guard;
  const std::string dir = prepare_out_dir(out_dir);
  CsvWriter csv(guard.track(dir + "/exp6.csv"),
                {"pipeline", "preset", "theta", "k", "R_hat"});
  RunMeta meta{"experiment-6", seed, "", {}};

  for (const auto& pipe : pipelines) {
    const auto [stoch, delta2] = split_adversarial(pipe.model);
    for (const PresetId id : presets) {
      const ResolvedPreset method = resolve_preset(id, mu, L);
      // One variance-proxy estimate per (pipeline, method), along the
      // noiseless reference trajectory, recorded in the metadata.
      CounterRng est_rng(seed, /*path=*/0xFFFFFFFFULL);
      const auto traj = reference_trajectory(
          prob, method.params, Vector<double>::Zero(prob.dim()), 100);
      const VarianceProxyEstimate vp =
          estimate_variance_proxy(stoch, prob, traj, 100, est_rng);
      const double sigma2_hat = vp.sigma2_hat + delta2;
      meta.stats.emplace_back(pipe.name + "/" + method.name + "/sigma2_hat",
                              format_double(sigma2_hat));

      SimOptions opt;
      opt.record_every = std::max<long>(1, K / 200);
      const PathEnsemble ens =
          simulate(prob, method.params, pipe.model, K, n_paths, seed, opt);
      if (ens.n_diverged > 0)
        meta.stats.emplace_back(
            pipe.name + "/" + method.name + "/n_diverged",
            std::to_string(ens.n_diverged));
      for (const double theta : thetas) {
        const EmpiricalRisk er = empirical_risk(ens, theta, sigma2_hat);
        for (std::size_t c = 0; c < er.ks.size(); ++c) {
          csv.cell(pipe.name);
          csv.cell(method.name);
          csv.cell(theta);
          csv.cell(er.ks[c]);
          csv.cell(er.values[c]);
          csv.end_row();
        }
      }
    }
  }
  csv.close();

  ConfigString cfg;
  cfg.add("cmd", "experiment-6");
  cfg.add("d", 10L);
  cfg.add("p", 1000L);
  cfg.add("mu", 0.005);
  cfg.add("L", 20.0);
  cfg.add("K", K);
  cfg.add("paths", n_paths);
  meta.config = cfg.s;
  guard.track(dir + "/meta.json");
  write_meta_json(dir, meta);
  guard.commit();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Risk-sensitive indices, H-infinity norms, rate functions, "
               "and high-probability bounds for momentum methods"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string out_dir = ".";
  std::uint64_t seed = 0;
  app.add_option("--out", out_dir, "Output directory (created if missing)")
      ->capture_default_str();
  app.add_option("--seed", seed, "RNG seed")->capture_default_str();

  // hinf
  auto* hinf = app.add_subcommand("hinf", "Exact H-infinity norms per method");
  ProblemFlags hinf_pf;
  MethodFlags hinf_mf;
  hinf_pf.add_to(hinf);
  hinf_mf.add_to(hinf);

  // risk-index
  auto* risk = app.add_subcommand(
      "risk-index", "Exact risk index R(theta), Riccati and integral routes");
  ProblemFlags risk_pf;
  MethodFlags risk_mf;
  risk_pf.add_to(risk);
  risk_mf.add_to(risk);
  double risk_sigma2 = 1.0, risk_theta = 0.0;
  std::string risk_noise, risk_theta_grid;
  auto* risk_sigma2_opt =
      risk->add_option("--sigma2", risk_sigma2, "Variance proxy");
  risk->add_option("--noise", risk_noise,
                   "Noise spec (sets sigma2 analytically)");
  auto* risk_theta_opt = risk->add_option("--theta", risk_theta, "Single theta");
  risk->add_option("--theta-grid", risk_theta_grid,
                   "Grid spec: v,v,... | lin:lo:hi:n | log:lo:hi:n");

  // rate-function
  auto* rate = app.add_subcommand("rate-function",
                                  "Large-deviation rate function I(s)");
  ProblemFlags rate_pf;
  MethodFlags rate_mf;
  rate_pf.add_to(rate);
  rate_mf.add_to(rate);
  double rate_sigma2 = 1.0;
  std::string rate_noise, rate_s_grid;
  auto* rate_sigma2_opt =
      rate->add_option("--sigma2", rate_sigma2, "Variance proxy");
  rate->add_option("--noise", rate_noise,
                   "Noise spec (sets sigma2 analytically)");
  rate->add_option("--s-grid", rate_s_grid, "Grid of s values (grid spec)");

  // bound
  auto* bound = app.add_subcommand(
      "bound", "Finite-time and asymptotic certificate bounds");
  ProblemFlags bound_pf;
  MethodFlags bound_mf;
  bound_pf.add_to(bound);
  bound_mf.add_to(bound);
  double bound_sigma2 = 1.0, bound_theta = 0.0;
  std::string bound_noise, bound_theta_grid, bound_t, bound_cert = "auto";
  long bound_K = 100;
  auto* bound_sigma2_opt =
      bound->add_option("--sigma2", bound_sigma2, "Variance proxy");
  bound->add_option("--noise", bound_noise,
                    "Noise spec (sets sigma2 analytically)");
  bound->add_option("--cert", bound_cert,
                    "auto|gd-distance|gd-function|nag")
      ->capture_default_str();
  auto* bound_theta_opt =
      bound->add_option("--theta", bound_theta, "Single theta");
  bound->add_option("--theta-grid", bound_theta_grid, "Theta grid spec");
  bound->add_option("--K", bound_K, "Horizon")->capture_default_str();
  bound->add_option("--t", bound_t, "Tail levels t (grid spec)");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo path ensemble");
  ProblemFlags sim_pf;
  MethodFlags sim_mf;
  sim_pf.add_to(sim);
  sim_mf.add_to(sim);
  std::string sim_noise;
  double sim_sigma2 = 1.0, sim_theta = 0.0;
  long sim_K = 1000, sim_paths = 100, sim_record = 0;
  sim->add_option("--noise", sim_noise,
                  "Noise spec (default gaussian:sigma2=1)");
  auto* sim_sigma2_opt = sim->add_option(
      "--sigma2", sim_sigma2, "Variance proxy for R-hat (default analytic)");
  sim->add_option("--theta", sim_theta, "Tilt for risk_hat.csv (default 0)")
      ->capture_default_str();
  sim->add_option("--K", sim_K, "Horizon")->capture_default_str();
  sim->add_option("--paths", sim_paths, "Number of paths")
      ->capture_default_str();
  sim->add_option("--record-every", sim_record,
                  "Snapshot stride (default auto: ~1000 snapshots)");

  // pareto
  auto* pareto = app.add_subcommand("pareto",
                                    "Rate-vs-risk sweep and Pareto frontier");
  ProblemFlags pareto_pf;
  pareto_pf.add_to(pareto);
  std::string pareto_method = "gd", pareto_noise;
  double pareto_theta = 0.2, pareto_sigma2 = 1.0;
  long pareto_na = 0, pareto_nb = 0;
  bool pareto_paper = false;
  pareto->add_option("--method", pareto_method, "gd|hb|nag")
      ->capture_default_str();
  pareto->add_option("--theta", pareto_theta, "Risk parameter (> 0)")
      ->capture_default_str();
  auto* pareto_sigma2_opt =
      pareto->add_option("--sigma2", pareto_sigma2, "Variance proxy");
  pareto->add_option("--noise", pareto_noise,
                     "Noise spec (sets sigma2 analytically)");
  pareto->add_option("--n-alpha", pareto_na, "Alpha resolution (0 = default)");
  pareto->add_option("--n-beta", pareto_nb, "Beta resolution (0 = default)");
  pareto->add_flag("--paper-scale", pareto_paper,
                   "Use the full 3000x3000 / 5000 grids");

  // experiment-6
  auto* exp6 = app.add_subcommand(
      "experiment-6", "Huber pipeline: minibatch and minibatch+adversarial");
  long exp6_K = 1000, exp6_paths = 100;
  exp6->add_option("--K", exp6_K, "Horizon")->capture_default_str();
  exp6->add_option("--paths", exp6_paths, "Number of paths")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand(hinf))
      return cmd_hinf(out_dir, hinf_pf, hinf_mf, seed);
    if (app.got_subcommand(risk))
      return cmd_risk_index(out_dir, risk_pf, risk_mf, risk_sigma2_opt,
                            risk_sigma2, risk_noise, risk_theta_opt,
                            risk_theta, risk_theta_grid, seed);
    if (app.got_subcommand(rate))
      return cmd_rate_function(out_dir, rate_pf, rate_mf, rate_sigma2_opt,
                               rate_sigma2, rate_noise, rate_s_grid, seed);
    if (app.got_subcommand(bound))
      return cmd_bound(out_dir, bound_pf, bound_mf, bound_sigma2_opt,
                       bound_sigma2, bound_noise, bound_cert, bound_theta_opt,
                       bound_theta, bound_theta_grid, bound_K, bound_t, seed);
    if (app.got_subcommand(sim))
      return cmd_simulate(out_dir, sim_pf, sim_mf, sim_noise, sim_sigma2_opt,
                          sim_sigma2, sim_theta, sim_K, sim_paths, sim_record,
                          seed);
    if (app.got_subcommand(pareto))
      return cmd_pareto(out_dir, pareto_pf, pareto_method, pareto_theta,
                        pareto_sigma2_opt, pareto_sigma2, pareto_noise,
                        pareto_na, pareto_nb, pareto_paper, seed);
    if (app.got_subcommand(exp6))
      return cmd_experiment6(out_dir, exp6_K, exp6_paths, seed);
    std::cerr << "error: no subcommand\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}
