// Command-line frontend: equilibrium solving, threshold-dynamics simulation,
// policy learning, estimator diagnostics, and dataset ingestion. All numeric
// parameters live in a JSON config; a handful of common ones have flag
// overrides. Outputs are CSV/JSON only.

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stratsel/estimators.hpp"
#include "stratsel/finite_sim.hpp"
#include "stratsel/fixtures.hpp"
#include "stratsel/ingest.hpp"
#include "stratsel/learner.hpp"
#include "stratsel/sphere.hpp"

using namespace stratsel;
using json = nlohmann::json;

namespace {

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;
  bool reproducible = false;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open config: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("config JSON: ") + e.what());
  }
}

Vec vec_from(const json& a) {
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i].get<double>();
  return v;
}

json vec_to(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

TypeDistribution make_builtin(const std::string& name,
                              std::optional<std::uint64_t> seed) {
  if (name == "toy")
    return seed ? make_toy_distribution(*seed) : make_toy_distribution();
  if (name == "highdim")
    return seed ? make_highdim_distribution(*seed) : make_highdim_distribution();
  throw InvalidInputError("unknown builtin distribution: " + name);
}

TypeDistribution resolve_distribution(const json& cfg,
                                      const std::string& dist_flag,
                                      const std::string& builtin_flag,
                                      std::optional<std::uint64_t> dist_seed) {
  if (!dist_flag.empty()) return TypeDistribution::load_json(dist_flag);
  if (!builtin_flag.empty()) return make_builtin(builtin_flag, dist_seed);
  if (cfg.contains("dist")) {
    const auto& d = cfg["dist"];
    if (d.is_string()) return TypeDistribution::load_json(d.get<std::string>());
    std::optional<std::uint64_t> seed;
    if (d.contains("seed")) seed = d["seed"].get<std::uint64_t>();
    return make_builtin(d.value("builtin", ""), seed);
  }
  throw InvalidInputError("no distribution given (use --dist or --builtin)");
}

std::ofstream open_out(const CommonOpts& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  const auto path = std::filesystem::path(opts.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write output file: " + path.string());
  if (!opts.reproducible) {
    const auto now = std::chrono::system_clock::to_time_t(
        std::chrono::system_clock::now());
    out << "# generated " << std::put_time(std::gmtime(&now), "%F %T UTC")
        << "\n";
  }
  return out;
}

void write_json_file(const CommonOpts& opts, const std::string& name,
                     const json& j) {
  std::filesystem::create_directories(opts.out_dir);
  const auto path = std::filesystem::path(opts.out_dir) / name;
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write output file: " + path.string());
  out << j.dump(2) << "\n";
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

Vec beta_from_config(const json& cfg, Eigen::Index d) {
  if (cfg.contains("beta")) return project_sphere(vec_from(cfg["beta"]));
  if (cfg.contains("theta")) {
    if (d != 2) throw InvalidInputError("theta parametrization needs d = 2");
    const double th = cfg["theta"].get<double>();
    return (Vec(2) << std::cos(th), std::sin(th)).finished();
  }
  return project_sphere(Vec::Constant(d, 1.0));
}

SimConfig sim_from_config(const json& cfg, const TypeDistribution& dist,
                          const CapacitySpec& q, std::uint64_t seed) {
  const json sim = cfg.value("sim", json::object());
  SimConfig out;
  out.n = sim.value("n", 10000);
  out.q = q;
  out.b_beta = sim.value("b_beta", 0.025);
  out.b_s = sim.value("b_s", 0.2);
  out.outcome_noise = sim.value("outcome_noise", 0.0);
  out.seed = seed;
  out.trunc_d = sim.value("trunc_d", 0.0);
  if (out.trunc_d <= 0.0) out.trunc_d = default_truncation_bound(dist, q);
  return out;
}

int cmd_eq_solve(const CommonOpts& opts, const json& cfg,
                 const TypeDistribution& dist) {
  const CapacitySpec q{cfg.value("q", 0.7)};
  const json eq_cfg = cfg.value("eq", json::object());
  const Vec beta = beta_from_config(eq_cfg, dist.dim());
  const double s0 = eq_cfg.value("s0", 0.0);
  const double tol = eq_cfg.value("tol", 1e-10);
  const int max_iter = eq_cfg.value("max_iter", 10000);

  const auto eq = meanfield_fixed_point(dist, beta, q, s0, tol, max_iter);
  const auto grads = value_gradients(dist, beta, q);

  json out;
  out["beta"] = vec_to(beta);
  out["q"] = q.q;
  out["s_star"] = eq.s_star;
  out["iterations"] = eq.iterations;
  out["residual"] = eq.residual;
  out["kappa_hat"] = eq.kappa_hat;
  out["v_eq"] = policy_value(dist, beta, eq.s_star, eq.s_star);
  out["threshold_gradient"] = vec_to(grads.ds_dbeta);
  out["threshold_gradient_tangent"] =
      vec_to(tangent_project(beta, grads.ds_dbeta));
  out["policy_gradient"] = vec_to(grads.total);

  // Multi-start uniqueness diagnostic.
  const int starts = eq_cfg.value("multistart", 10);
  Rng rng(opts.seed.value_or(0));
  double spread = 0.0;
  for (int i = 0; i < starts; ++i) {
    const double s_alt =
        meanfield_fixed_point(dist, beta, q, rng.next_uniform(-10.0, 10.0), tol,
                              max_iter)
            .s_star;
    spread = std::max(spread, std::abs(s_alt - eq.s_star));
  }
  out["multistart_spread"] = spread;
  write_json_file(opts, "equilibrium.json", out);

  {
    auto sweep = open_out(opts, "score_sweep.csv");
    sweep << "r,cdf,pdf\n";
    const double sigma = dist.noise.sigma;
    for (int i = 0; i <= 200; ++i) {
      const double r = eq.s_star - 8.0 * sigma + i * (16.0 * sigma / 200.0);
      sweep << fmt(r) << ',' << fmt(score_cdf(dist, beta, eq.s_star, r)) << ','
            << fmt(score_pdf(dist, beta, eq.s_star, r)) << '\n';
    }
  }
  {
    auto qs = open_out(opts, "quantile_sweep.csv");
    qs << "p,quantile\n";
    for (int i = 1; i <= 99; ++i) {
      const double p = i / 100.0;
      qs << fmt(p) << ','
         << fmt(quantile(dist, beta, eq.s_star, CapacitySpec{p})) << '\n';
    }
  }

  if (eq_cfg.value("sweep_beta", false)) {
    if (dist.dim() != 2)
      throw InvalidInputError("--sweep-beta requires a two-dimensional policy");
    auto sweep = open_out(opts, "beta_sweep.csv");
    sweep << "theta,beta_1,beta_2,s_star,v_eq\n";
    const int points = eq_cfg.value("sweep_points", 157);
    for (int i = 0; i <= points; ++i) {
      const double th = i * (M_PI / points);
      const Vec b = (Vec(2) << std::cos(th), std::sin(th)).finished();
      const double s = equilibrium_threshold(dist, b, q);
      sweep << fmt(th) << ',' << fmt(b[0]) << ',' << fmt(b[1]) << ',' << fmt(s)
            << ',' << fmt(policy_value(dist, b, s, s)) << '\n';
    }
  }
  return 0;
}

int cmd_simulate(const CommonOpts& opts, const json& cfg,
                 const TypeDistribution& dist) {
  const CapacitySpec q{cfg.value("q", 0.7)};
  const json sim_cfg = cfg.value("simulate", json::object());
  const Vec beta = beta_from_config(sim_cfg, dist.dim());
  const int t_steps = sim_cfg.value("t_steps", 60);
  const double s0 = sim_cfg.value("s0", 0.0);

  std::vector<int> n_values;
  if (sim_cfg.contains("n_sweep"))
    for (const auto& n : sim_cfg["n_sweep"]) n_values.push_back(n.get<int>());

  SimConfig sim = sim_from_config(cfg, dist, q, *opts.seed);
  if (n_values.empty()) n_values.push_back(sim.n);

  for (int n : n_values) {
    SimConfig run = sim;
    run.n = n;
    const auto trace = stochastic_fpi(dist, beta, run, s0, t_steps);
    auto out = open_out(opts, n_values.size() == 1
                                  ? std::string("threshold_trace.csv")
                                  : "threshold_trace_n" + std::to_string(n) +
                                        ".csv");
    out << "step,threshold\n";
    for (size_t t = 0; t < trace.size(); ++t)
      out << (t + 1) << ',' << fmt(trace[t]) << '\n';
  }

  if (sim_cfg.value("record", false)) {
    const auto warm = stochastic_fpi(dist, beta, sim, s0, t_steps);
    const auto rec = run_perturbed_round(dist, beta, sim, warm.back(),
                                         std::uint64_t(t_steps));
    auto out = open_out(opts, "experiment_record.csv");
    rec.write_csv(out);
    write_json_file(opts, "experiment_record.json",
                    json::parse(rec.sidecar_json()));
  }
  return 0;
}

void write_learn_trace(const CommonOpts& opts, const LearnTrace& trace,
                       Eigen::Index d) {
  auto out = open_out(opts, "learn_trace.csv");
  out << "epoch";
  for (Eigen::Index j = 0; j < d; ++j) out << ",beta_" << (j + 1);
  if (d == 2) out << ",theta";
  out << ",s_eq,v_hat,v_eq,model_grad_norm,eq_grad_norm,policy_grad_norm,"
         "degenerate,update_skipped\n";
  for (size_t e = 0; e < trace.epochs.size(); ++e) {
    const auto& log = trace.epochs[e];
    out << e;
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << fmt(log.beta[j]);
    if (d == 2) out << ',' << fmt(std::atan2(log.beta[1], log.beta[0]));
    out << ',' << fmt(log.s_eq) << ',' << fmt(log.v_hat) << ','
        << fmt(log.v_eq_oracle.value_or(
               std::numeric_limits<double>::quiet_NaN()))
        << ',' << fmt(log.report.model_grad.norm()) << ','
        << fmt(log.report.eq_grad.norm()) << ','
        << fmt(log.report.policy_grad.norm()) << ','
        << int(log.report.degenerate_denominator) << ','
        << int(log.update_skipped) << '\n';
  }
}

int cmd_learn(const CommonOpts& opts, const json& cfg,
              const TypeDistribution& dist);

// Runs all three methods and writes a one-row-per-method comparison.
int cmd_learn_all(const CommonOpts& opts, json cfg,
                  const TypeDistribution& dist) {
  auto summary = open_out(opts, "method_summary.csv");
  summary << "method,v_eq";
  for (Eigen::Index j = 0; j < dist.dim(); ++j) summary << ",beta_" << (j + 1);
  summary << "\n";
  for (const std::string method : {"competition", "strategy", "capacity"}) {
    CommonOpts sub = opts;
    sub.out_dir =
        (std::filesystem::path(opts.out_dir) / method).string();
    cfg["learn"]["method"] = method;
    cmd_learn(sub, cfg, dist);
    std::ifstream in(std::filesystem::path(sub.out_dir) /
                     "final_policy.json");
    const json fin = json::parse(in);
    summary << method << ',' << fmt(fin["v_eq"].get<double>());
    for (const auto& b : fin["beta"]) summary << ',' << fmt(b.get<double>());
    summary << "\n";
  }
  return 0;
}

int cmd_learn(const CommonOpts& opts, const json& cfg,
              const TypeDistribution& dist) {
  const CapacitySpec q{cfg.value("q", 0.7)};
  const json learn_cfg = cfg.value("learn", json::object());
  const std::string method = learn_cfg.value("method", "competition");
  if (method == "all") return cmd_learn_all(opts, cfg, dist);

  if (method == "capacity") {
    const int n_rct = learn_cfg.value("n_rct", 1000000);
    const std::string obs = learn_cfg.value("rct_observation", "noisy");
    const Vec beta = capacity_aware_baseline(
        dist, n_rct, q, *opts.seed,
        obs == "raw" ? RctObservation::RawCovariates
                     : RctObservation::NoisyReports);
    json out;
    out["method"] = "capacity";
    out["beta"] = vec_to(beta);
    out["v_eq"] = equilibrium_policy_value(dist, beta, q);
    if (dist.dim() == 2) out["theta"] = std::atan2(beta[1], beta[0]);
    write_json_file(opts, "final_policy.json", out);
    return 0;
  }

  LearnConfig lc;
  lc.epochs = learn_cfg.value("epochs", 100);
  lc.lr = learn_cfg.value("lr", 0.5);
  lc.equilibrate_steps = learn_cfg.value("equilibrate_steps", 50);
  lc.kde_bandwidth = learn_cfg.value("kde_bandwidth", 0.0);
  lc.with_oracle = learn_cfg.value("with_oracle", true);
  lc.sim = sim_from_config(cfg, dist, q, *opts.seed);
  if (method == "competition")
    lc.method = LearnMethod::CompetitionAware;
  else if (method == "strategy")
    lc.method = LearnMethod::StrategyAware;
  else
    throw InvalidInputError("unknown method: " + method);
  if (learn_cfg.contains("init_beta") && learn_cfg["init_beta"].is_array())
    lc.init_beta = project_sphere(vec_from(learn_cfg["init_beta"]));

  const auto trace = learn(dist, lc);
  write_learn_trace(opts, trace, dist.dim());
  json out;
  out["method"] = method;
  out["beta"] = vec_to(trace.final_beta);
  if (trace.final_v_eq) out["v_eq"] = *trace.final_v_eq;
  if (dist.dim() == 2)
    out["theta"] = std::atan2(trace.final_beta[1], trace.final_beta[0]);
  write_json_file(opts, "final_policy.json", out);
  return 0;
}

int cmd_grad_check(const CommonOpts& opts, const json& cfg,
                   const TypeDistribution& dist) {
  const CapacitySpec q{cfg.value("q", 0.7)};
  const json gc = cfg.value("grad_check", json::object());
  const Vec beta = beta_from_config(gc, dist.dim());
  const int seeds = gc.value("seeds", 10);
  std::vector<int> n_values{10000, 100000};
  if (gc.contains("n_values")) {
    n_values.clear();
    for (const auto& n : gc["n_values"]) n_values.push_back(n.get<int>());
  }

  const auto oracle = value_gradients(dist, beta, q);
  const Vec tangent_true = tangent_project(beta, oracle.total);

  auto out = open_out(opts, "grad_check.csv");
  out << "n,seed,err_pg_tangent_rel,mg_norm,eg_norm,pg_norm,density_hat\n";

  json summary;
  summary["beta"] = vec_to(beta);
  summary["s_star"] = oracle.s_star;
  summary["tangent_gradient_norm"] = tangent_true.norm();
  json per_n = json::array();

  for (int n : n_values) {
    SimConfig sim = sim_from_config(cfg, dist, q, *opts.seed);
    sim.n = n;
    std::vector<double> errs;
    for (int s = 0; s < seeds; ++s) {
      SimConfig run = sim;
      run.seed = sim.seed + std::uint64_t(s);
      const auto path = stochastic_fpi(dist, beta, run, oracle.s_star, 30, 0);
      const auto rec = run_perturbed_round(dist, beta, run, path.back(), 40);
      const auto rep = policy_gradient(rec, run.b_beta, run.b_s);
      const double err =
          (tangent_project(beta, rep.policy_grad) - tangent_true).norm() /
          std::max(tangent_true.norm(), 1e-300);
      errs.push_back(err);
      out << n << ',' << s << ',' << fmt(err) << ','
          << fmt(rep.model_grad.norm()) << ',' << fmt(rep.eq_grad.norm())
          << ',' << fmt(rep.policy_grad.norm()) << ',' << fmt(rep.density_hat)
          << '\n';
    }
    std::sort(errs.begin(), errs.end());
    json row;
    row["n"] = n;
    row["median_err_pg_tangent_rel"] =
        errs.size() % 2 ? errs[errs.size() / 2]
                        : 0.5 * (errs[errs.size() / 2 - 1] +
                                 errs[errs.size() / 2]);
    per_n.push_back(row);
  }
  summary["per_n"] = per_n;
  write_json_file(opts, "grad_check_summary.json", summary);
  return 0;
}

int cmd_ingest(const CommonOpts& opts, const json& cfg) {
  const json ig = cfg.value("ingest", json::object());
  if (!ig.contains("csv"))
    throw InvalidInputError("ingest: config must name a csv file");

  StudentSchema schema = StudentSchema::nels();
  IngestConfig icfg;
  const Eigen::Index d = schema.dim();
  icfg.beta_bar = ig.contains("beta_bar")
                      ? project_sphere(vec_from(ig["beta_bar"]))
                      : project_sphere(Vec::Constant(d, 1.0));
  icfg.s_bar = ig.value("s_bar", 19.5);
  icfg.sigma = ig.value("sigma", 1.20);
  icfg.g_test = ig.value("g_test", 0.1);
  icfg.c_g = ig.value("c_g", 1.0);
  icfg.k_clusters = ig.value("k", 8);
  icfg.kmeans_restarts = ig.value("restarts", 10);
  icfg.kmeans_iters = ig.value("iters", 300);
  icfg.seed = opts.seed.value_or(ig.value("seed", std::uint64_t(0)));
  icfg.outcome = ig.value("outcome", "F3ATTEND");

  std::map<std::string, double> imputation = {
      {"F2SES1", -0.088},  {"F22XRSTD", 63.81}, {"F22XMSTD", 63.96},
      {"F22XSSTD", 64.01}, {"F22XHSTD", 64.30}, {"F2RHENG2", 7.07},
      {"F2RHMAG2", 7.61},  {"F2RHSCG2", 7.43},  {"F2RHSOG2", 7.01},
      {"F2RHFOG2", 6.58},  {"F3ATTEND", 19.21}};
  if (ig.contains("imputation"))
    for (const auto& [key, value] : ig["imputation"].items())
      imputation[key] = value.get<double>();

  const auto rows =
      load_student_csv(ig["csv"].get<std::string>(), schema, imputation);
  const auto dist = ingest_pipeline(rows, schema, icfg);

  if (ig.value("check_roundtrip", false)) {
    const auto pct = ses_percentiles(rows);
    const NoiseModel noise{icfg.sigma};
    const CovariateBox box = CovariateBox::centered(d, 500.0);
    double worst = 0.0;
    for (size_t i = 0; i < rows.size(); ++i) {
      const Vec g = cost_weights(schema, icfg, pct[i]);
      AgentType agent;
      agent.z = invert_raw_covariates(rows[i], g, icfg);
      agent.cost.g = g;
      const auto br =
          best_response(agent, icfg.beta_bar, icfg.s_bar, noise, box);
      worst = std::max(worst,
                       (br.x - rows[i].x_star).cwiseAbs().maxCoeff());
    }
    if (worst > 1e-8)
      throw NumericalError("ingest round-trip residual " +
                           std::to_string(worst));
    std::cout << "round-trip max residual " << worst << "\n";
  }

  std::filesystem::create_directories(opts.out_dir);
  dist.save_json(
      (std::filesystem::path(opts.out_dir) / "distribution.json").string());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Capacity-constrained strategic selection toolkit"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string dist_flag, builtin_flag;
  std::optional<std::uint64_t> dist_seed;

  auto add_common = [&](CLI::App* sub, bool needs_seed) {
    sub->add_option("--config", opts.config_path, "JSON config file");
    sub->add_option("--out", opts.out_dir, "output directory");
    auto* seed_opt = sub->add_option_function<std::uint64_t>(
        "--seed", [&](const std::uint64_t& s) { opts.seed = s; }, "RNG seed");
    if (needs_seed) seed_opt->required();
    sub->add_flag("--reproducible", opts.reproducible,
                  "suppress timestamp headers for byte-identical reruns");
    sub->add_option("--dist", dist_flag, "distribution JSON file");
    sub->add_option("--builtin", builtin_flag,
                    "built-in distribution: toy | highdim");
    sub->add_option_function<std::uint64_t>(
        "--dist-seed", [&](const std::uint64_t& v) { dist_seed = v; },
        "seed for builtin distributions");
  };

  auto* eq = app.add_subcommand("eq-solve", "mean-field equilibrium analysis");
  add_common(eq, false);
  bool sweep_beta = false;
  eq->add_flag("--sweep-beta", sweep_beta, "emit the d=2 criterion sweep");

  auto* sim = app.add_subcommand("simulate", "stochastic threshold dynamics");
  add_common(sim, true);

  auto* lrn = app.add_subcommand("learn", "policy optimization");
  add_common(lrn, true);
  std::string method_flag;
  lrn->add_option("--method", method_flag,
                  "competition | strategy | capacity | all");

  auto* gc =
      app.add_subcommand("grad-check", "estimator vs analytic-oracle errors");
  add_common(gc, true);

  auto* ing = app.add_subcommand("ingest", "CSV -> type distribution");
  add_common(ing, false);
  std::string csv_flag;
  ing->add_option("--csv", csv_flag, "student CSV path");

  CLI11_PARSE(app, argc, argv);

  try {
    json cfg = load_config(opts.config_path);
    if (eq->parsed()) {
      if (sweep_beta) cfg["eq"]["sweep_beta"] = true;
      return cmd_eq_solve(
          opts, cfg,
          resolve_distribution(cfg, dist_flag, builtin_flag, dist_seed));
    }
    if (sim->parsed())
      return cmd_simulate(
          opts, cfg,
          resolve_distribution(cfg, dist_flag, builtin_flag, dist_seed));
    if (lrn->parsed()) {
      if (!method_flag.empty()) cfg["learn"]["method"] = method_flag;
      return cmd_learn(
          opts, cfg,
          resolve_distribution(cfg, dist_flag, builtin_flag, dist_seed));
    }
    if (gc->parsed())
      return cmd_grad_check(
          opts, cfg,
          resolve_distribution(cfg, dist_flag, builtin_flag, dist_seed));
    if (ing->parsed()) {
      if (!csv_flag.empty()) cfg["ingest"]["csv"] = csv_flag;
      return cmd_ingest(opts, cfg);
    }
  } catch (const InvalidInputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return 2;
  } catch (const NonConvergenceError& e) {
    std::cerr << "numerical error: " << e.what() << "\n  trace:";
    for (double s : e.trace) std::cerr << ' ' << s;
    std::cerr << "\n";
    return 1;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
