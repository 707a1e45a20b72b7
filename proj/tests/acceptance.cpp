// Acceptance suite: one numbered check per benchmark criterion, each printing
// a PASS/FAIL line with the measured quantities. Exits nonzero if any check
// fails. Expected runtime on two cores is roughly half an hour; the heavy
// learning benchmarks dominate.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <numeric>
#include <string>
#include <vector>

#include "stratsel/estimators.hpp"
#include "stratsel/finite_sim.hpp"
#include "stratsel/fixtures.hpp"
#include "stratsel/gauss.hpp"
#include "stratsel/ingest.hpp"
#include "stratsel/learner.hpp"
#include "stratsel/sphere.hpp"
#include "test_util.hpp"

using namespace stratsel;
using testutil::median;

namespace {

int g_failures = 0;

void report(int id, bool pass, const std::string& name,
            const std::string& detail, double seconds) {
  std::printf("[%2d] %s  %-34s %s  (%.1fs)\n", id, pass ? "PASS" : "FAIL",
              name.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

void run(int id, const std::string& name,
         const std::function<std::pair<bool, std::string>()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  bool pass = false;
  std::string detail;
  try {
    std::tie(pass, detail) = body();
  } catch (const std::exception& e) {
    pass = false;
    detail = std::string("exception: ") + e.what();
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  report(id, pass, name, detail, secs);
}

std::string fmt(const char* pattern, ...) {
  char buf[512];
  va_list args;
  va_start(args, pattern);
  std::vsnprintf(buf, sizeof buf, pattern, args);
  va_end(args);
  return buf;
}

const CapacitySpec kQ{0.7};

Vec theta_beta(double th) {
  return (Vec(2) << std::cos(th), std::sin(th)).finished();
}

// Fine sweep + local refinement for the toy optimum.
std::pair<double, double> toy_optimum(const TypeDistribution& toy) {
  double best_v = -1e300, best_th = 0.0;
  for (int i = 0; i <= 1570; ++i) {
    const double th = i * 0.001;
    const double v = equilibrium_policy_value(toy, theta_beta(th), kQ);
    if (v > best_v) {
      best_v = v;
      best_th = th;
    }
  }
  for (double step = 5e-4; step > 1e-7; step *= 0.5)
    for (const double th : {best_th - step, best_th + step}) {
      const double v = equilibrium_policy_value(toy, theta_beta(th), kQ);
      if (v > best_v) {
        best_v = v;
        best_th = th;
      }
    }
  return {best_th, best_v};
}

SimConfig make_sim(const TypeDistribution& dist, int n, std::uint64_t seed,
                   double b_beta = 0.0, double b_s = 0.0) {
  SimConfig cfg;
  cfg.n = n;
  cfg.q = kQ;
  cfg.seed = seed;
  cfg.b_beta = b_beta;
  cfg.b_s = b_s;
  cfg.trunc_d = default_truncation_bound(dist, kQ);
  return cfg;
}

// ---------------------------------------------------------------------------

std::pair<bool, std::string> criterion_foc() {
  Rng rng(2024);
  double worst_foc = 0.0;
  double worst_grid = 0.0;
  int grid_checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int d = 1 + int(rng.next_double() * 4.0);
    AgentType a;
    a.z = Vec(d);
    a.cost.g = Vec(d);
    for (int j = 0; j < d; ++j) {
      a.z[j] = rng.next_uniform(-5.0, 5.0);
      a.cost.g[j] = rng.next_uniform(0.05, 2.0);
    }
    const double sigma = testutil::uniqueness_sigma(a, rng.next_uniform(1.05, 4.0));
    const Vec beta = testutil::random_unit(rng, d);
    const double s = beta.dot(a.z) + rng.next_uniform(-8.0, 8.0) * sigma;
    const NoiseModel noise{sigma};
    const CovariateBox box = CovariateBox::centered(d);

    const auto br = best_response(a, beta, s, noise, box);
    const Vec lhs = 2.0 * (a.cost.g.array() * (br.x - a.z).array()).matrix();
    const Vec rhs = normal_pdf(s - beta.dot(br.x), sigma) * beta;
    worst_foc = std::max(worst_foc, (lhs - rhs).cwiseAbs().maxCoeff());

    if (d <= 2 && grid_checked < 60) {
      const Vec grid = testutil::grid_best_response(a, beta, s, sigma);
      worst_grid =
          std::max(worst_grid, (br.x - grid).cwiseAbs().maxCoeff());
      ++grid_checked;
    }
  }
  const bool pass = worst_foc <= 1e-10 && worst_grid <= 2e-3;
  return {pass, fmt("1000 agents: max FOC residual %.2e (<=1e-10), "
                    "grid oracle on %d instances max dev %.2e (<=2e-3)",
                    worst_foc, grid_checked, worst_grid)};
}

std::pair<bool, std::string> criterion_figure1() {
  AgentType a;
  a.z = (Vec(2) << 3.0, 0.0).finished();
  a.cost.g = (Vec(2) << 0.1, 1.0).finished();
  const Vec beta = (Vec(2) << 1.0, 0.0).finished();
  const CovariateBox box = CovariateBox::centered(2);

  // Contraction panel: sigma = 3.30.
  double max_slope = 0.0;
  for (int i = 0; i <= 1500; ++i) {
    const double s = -5.0 + 0.01 * i;
    max_slope = std::max(
        max_slope, std::abs(score_derivative(a, beta, s, NoiseModel{3.30}, box)));
  }

  // Continuity panel: sigma = 1.35, no jump above 1e-2 at step 1e-4.
  double max_step_mid = 0.0;
  {
    const NoiseModel noise{1.35};
    double prev = best_response_multimodal(a, beta, 0.0, noise, box).score;
    for (int i = 1; i <= 60000; ++i) {
      const double s = i * 1e-4;
      const double w = best_response_multimodal(a, beta, s, noise, box).score;
      max_step_mid = std::max(max_step_mid, std::abs(w - prev));
      prev = w;
    }
  }

  // Discontinuous panel: sigma = 1.0 exhibits a jump above 0.5.
  double max_jump_low = 0.0;
  {
    const NoiseModel noise{1.0};
    double prev = best_response_multimodal(a, beta, 0.0, noise, box).score;
    for (int i = 1; i <= 6000; ++i) {
      const double s = i * 1e-3;
      const double w = best_response_multimodal(a, beta, s, noise, box).score;
      max_jump_low = std::max(max_jump_low, std::abs(w - prev));
      prev = w;
    }
  }

  const bool pass = max_slope < 1.0 && max_step_mid <= 1e-2 && max_jump_low > 0.5;
  return {pass,
          fmt("sigma=3.30 max|dw/ds|=%.3f (<1), sigma=1.35 max step %.2e "
              "(<=1e-2), sigma=1.00 jump %.2f (>0.5)",
              max_slope, max_step_mid, max_jump_low)};
}

std::pair<bool, std::string> criterion_equilibria() {
  const auto schema = StudentSchema::nels();
  const std::map<std::string, double> imput = {
      {"F2SES1", -0.088},  {"F22XRSTD", 63.81}, {"F22XMSTD", 63.96},
      {"F22XSSTD", 64.01}, {"F22XHSTD", 64.30}, {"F2RHENG2", 7.07},
      {"F2RHMAG2", 7.61},  {"F2RHSCG2", 7.43},  {"F2RHSOG2", 7.01},
      {"F2RHFOG2", 6.58},  {"F3ATTEND", 19.21}};
  IngestConfig icfg;
  icfg.beta_bar = Vec::Constant(9, 1.0 / 3.0);
  icfg.seed = 5;
  icfg.outcome = "F3ATTEND";
  const auto rows = load_student_csv(
      std::string(STRATSEL_DATA_DIR) + "/synthetic_students.csv", schema, imput);
  const auto ingested = ingest_pipeline(rows, schema, icfg);

  double worst_residual = 0.0, worst_spread = 0.0;
  int which = 0;
  for (const auto& dist :
       {make_toy_distribution(), make_highdim_distribution(), ingested}) {
    const Eigen::Index d = dist.dim();
    Rng rng(100 + which++);
    const Vec beta = d == 2 ? theta_beta(0.6)
                            : project_sphere(Vec::Constant(d, 1.0) +
                                             0.1 * testutil::random_unit(rng, d));
    const auto ref = meanfield_fixed_point(dist, beta, kQ, 0.0, 1e-10);
    worst_residual = std::max(worst_residual, ref.residual);
    for (int i = 0; i < 10; ++i) {
      const auto eq = meanfield_fixed_point(dist, beta, kQ,
                                            rng.next_uniform(-10.0, 10.0),
                                            1e-10);
      worst_residual = std::max(worst_residual, eq.residual);
      worst_spread = std::max(worst_spread, std::abs(eq.s_star - ref.s_star));
    }
  }
  const bool pass = worst_residual <= 1e-8 && worst_spread <= 1e-6;
  return {pass, fmt("toy/highdim/ingested: max residual %.2e (<=1e-8), "
                    "10-start spread %.2e (<=1e-6)",
                    worst_residual, worst_spread)};
}

std::pair<bool, std::string> criterion_concentration() {
  const auto toy = make_toy_distribution();
  const Vec beta = theta_beta(0.6);
  const double s_star = meanfield_fixed_point(toy, beta, kQ).s_star;
  std::vector<double> med_std;
  bool centered = true;
  for (int n : {100, 1000, 10000}) {
    std::vector<double> stds, devs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SimConfig cfg = make_sim(toy, n, 4000 + seed);
      const auto trace = stochastic_fpi(toy, beta, cfg, 0.0, 60);
      const std::vector<double> tail(trace.end() - 20, trace.end());
      stds.push_back(testutil::stddev(tail));
      devs.push_back(std::abs(testutil::mean(tail) - s_star));
    }
    med_std.push_back(median(stds));
    if (median(devs) > 3.0 * median(stds)) centered = false;
  }
  const bool decreasing = med_std[0] > med_std[1] && med_std[1] > med_std[2];
  return {decreasing && centered,
          fmt("median trailing std %.4f > %.4f > %.4f, trailing means within "
              "3 stds of s*: %s",
              med_std[0], med_std[1], med_std[2], centered ? "yes" : "no")};
}

std::pair<bool, std::string> criterion_gradient_consistency() {
  const auto toy = make_toy_distribution();
  const double theta = 0.3;
  const Vec beta = theta_beta(theta);
  const Vec tdir = (Vec(2) << -std::sin(theta), std::cos(theta)).finished();
  const auto oracle = value_gradients(toy, beta, kQ);
  const double truth = tdir.dot(oracle.total);

  auto run_block = [&](int n) {
    std::vector<double> est, errs;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SimConfig cfg = make_sim(toy, n, 100 + seed, 0.025, 0.2);
      const auto path = stochastic_fpi(toy, beta, cfg, oracle.s_star, 30, 0);
      const auto rec = run_perturbed_round(toy, beta, cfg, path.back(), 40);
      const auto rep = policy_gradient(rec, cfg.b_beta, cfg.b_s);
      const double e = tdir.dot(rep.policy_grad);
      est.push_back(e);
      errs.push_back(std::abs(e - truth) / std::abs(truth));
    }
    return std::make_pair(std::abs(median(est) - truth) / std::abs(truth),
                          median(errs));
  };

  const auto [med_est_err_2e5, med_err_2e5] = run_block(200000);
  const auto [med_est_err_1e5, med_err_1e5] = run_block(100000);
  const bool pass = med_est_err_2e5 <= 0.15 && med_err_1e5 > med_err_2e5;
  return {pass,
          fmt("median-estimate rel err %.3f (<=0.15) at n=2e5; per-seed "
              "median err %.2f (n=1e5) > %.2f (n=2e5)",
              med_est_err_2e5, med_err_1e5, med_err_2e5)};
}

std::pair<bool, std::string> criterion_threshold_gradient() {
  double worst = 0.0;
  for (int which = 0; which < 2; ++which) {
    const TypeDistribution dist =
        which == 0 ? make_toy_distribution() : make_highdim_distribution();
    const Eigen::Index d = dist.dim();
    Rng rng(17 + which);
    Vec beta = which == 0
                   ? theta_beta(0.6)
                   : project_sphere(Vec::Constant(d, 1.0) +
                                    0.2 * testutil::random_unit(rng, d));
    const Vec analytic =
        tangent_project(beta, threshold_gradient(dist, beta, kQ));
    std::vector<Vec> basis;
    for (Eigen::Index j = 0; j < d && Eigen::Index(basis.size()) < d - 1; ++j) {
      Vec v = Vec::Zero(d);
      v[j] = 1.0;
      v -= beta.dot(v) * beta;
      for (const auto& b : basis) v -= b.dot(v) * b;
      if (v.norm() > 1e-8) basis.push_back(v / v.norm());
    }
    const double h = 1e-4;
    Vec fd = Vec::Zero(d);
    for (const auto& t : basis) {
      const double up =
          meanfield_fixed_point(dist, project_sphere(beta + h * t), kQ, 0.0,
                                1e-12)
              .s_star;
      const double dn =
          meanfield_fixed_point(dist, project_sphere(beta - h * t), kQ, 0.0,
                                1e-12)
              .s_star;
      fd += ((up - dn) / (2.0 * h)) * t;
    }
    worst = std::max(worst, (analytic - fd).norm() / fd.norm());
  }
  return {worst <= 0.05,
          fmt("max tangent relative L2 error %.4f (<=0.05)", worst)};
}

struct Table2Result {
  std::vector<double> comp_gaps, strat_gaps, cap_gaps;
  Vec cap_beta;
  double theta_star = 0.0;
};

Table2Result run_table2(const TypeDistribution& toy, double v_star) {
  Table2Result out;
  const Vec init = (Vec(2) << 1.0, 0.0).finished();
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (const auto method :
         {LearnMethod::CompetitionAware, LearnMethod::StrategyAware}) {
      LearnConfig cfg;
      cfg.epochs = 100;
      cfg.lr = method == LearnMethod::CompetitionAware ? 0.5 : 0.25;
      cfg.method = method;
      cfg.init_beta = init;
      cfg.sim = make_sim(toy, 100000, 9000 + seed, 0.025, 0.2);
      cfg.with_oracle = false;
      const auto trace = learn(toy, cfg);
      const double gap =
          v_star - equilibrium_policy_value(toy, trace.final_beta, kQ);
      (method == LearnMethod::CompetitionAware ? out.comp_gaps
                                               : out.strat_gaps)
          .push_back(gap);
    }
    const Vec cap = capacity_aware_baseline(toy, 1000000, kQ, 9000 + seed,
                                            RctObservation::RawCovariates);
    if (seed == 1) out.cap_beta = cap;
    out.cap_gaps.push_back(v_star - equilibrium_policy_value(toy, cap, kQ));
  }
  return out;
}

std::pair<bool, std::string> criterion_table2(const TypeDistribution& toy,
                                              const Table2Result& res) {
  const double comp = median(res.comp_gaps);
  const double strat = median(res.strat_gaps);
  const double cap = median(res.cap_gaps);
  const bool pass = comp <= 0.02 && strat >= 0.0 && strat <= 0.15 &&
                    cap >= 0.09 && cap <= 0.29 && comp <= strat &&
                    strat <= cap;
  return {pass, fmt("median gaps: comp %.4f (<=0.02), strat %.4f ([0,0.15]), "
                    "cap %.4f ([0.09,0.29]), ordering %s",
                    comp, strat, cap,
                    (comp <= strat && strat <= cap) ? "ok" : "violated")};
}

std::pair<bool, std::string> criterion_shares(const TypeDistribution& toy,
                                              const Vec& cap_beta) {
  const auto naturals = toy.tag_mask("natural");
  const double share_cap = natural_share_above(toy, cap_beta, kQ, naturals);
  const Vec beta_star = project_sphere((Vec(2) << 0.345, 0.938).finished());
  const double share_star = natural_share_above(toy, beta_star, kQ, naturals);
  const bool pass = std::abs(share_cap - 0.35) <= 0.10 &&
                    std::abs(share_star - 0.69) <= 0.10;
  return {pass, fmt("natural share %.3f at beta_cap (0.35+-0.10), %.3f at "
                    "beta* (0.69+-0.10)",
                    share_cap, share_star)};
}

std::pair<bool, std::string> criterion_table3() {
  const auto hd = make_highdim_distribution();
  const double scale = (1.0 - kQ.q) * 5.0;  // treated-average outcome units
  const Vec init = project_sphere(Vec::Constant(10, 1.0));

  std::vector<double> comp_v, strat_v, cap_v;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    for (const auto method :
         {LearnMethod::CompetitionAware, LearnMethod::StrategyAware}) {
      LearnConfig cfg;
      cfg.epochs = 100;
      cfg.lr = 0.5;
      cfg.method = method;
      cfg.init_beta = init;
      // The quantile map contracts fast here (kappa ~ 0.02), so a short
      // equilibration already reaches the stochastic steady state.
      cfg.equilibrate_steps = 15;
      cfg.sim = make_sim(hd, 100000, 7000 + seed, 0.025, 0.2);
      cfg.with_oracle = false;
      const auto trace = learn(hd, cfg);
      (method == LearnMethod::CompetitionAware ? comp_v : strat_v)
          .push_back(equilibrium_policy_value(hd, trace.final_beta, kQ));
    }
    const Vec cap = capacity_aware_baseline(hd, 1000000, kQ, 7000 + seed,
                                            RctObservation::NoisyReports);
    cap_v.push_back(equilibrium_policy_value(hd, cap, kQ));
  }
  const double comp = median(comp_v) / scale;
  const double strat = median(strat_v) / scale;
  const double cap = median(cap_v) / scale;
  const bool ordering = median(comp_v) >= median(strat_v) &&
                        median(strat_v) >= median(cap_v);
  const bool windows = std::abs(comp - 6.15) <= 0.30 &&
                       std::abs(strat - 6.12) <= 0.30 &&
                       std::abs(cap - 5.83) <= 0.30;
  return {ordering && windows,
          fmt("treated-average values: comp %.3f (6.15+-0.3), strat %.3f "
              "(6.12+-0.3), cap %.3f (5.83+-0.3), ordering %s",
              comp, strat, cap, ordering ? "ok" : "violated")};
}

std::pair<bool, std::string> criterion_ingest() {
  const auto schema = StudentSchema::nels();
  const std::map<std::string, double> imput = {
      {"F2SES1", -0.088},  {"F22XRSTD", 63.81}, {"F22XMSTD", 63.96},
      {"F22XSSTD", 64.01}, {"F22XHSTD", 64.30}, {"F2RHENG2", 7.07},
      {"F2RHMAG2", 7.61},  {"F2RHSCG2", 7.43},  {"F2RHSOG2", 7.01},
      {"F2RHFOG2", 6.58},  {"F3ATTEND", 19.21}};
  const auto rows = load_student_csv(
      std::string(STRATSEL_DATA_DIR) + "/synthetic_students.csv", schema, imput);
  IngestConfig icfg;
  icfg.beta_bar = Vec::Constant(9, 1.0 / 3.0);
  icfg.seed = 5;
  icfg.outcome = "F3ATTEND";

  // Inversion round trip on every row.
  const auto pct = ses_percentiles(rows);
  const NoiseModel noise{icfg.sigma};
  const CovariateBox box = CovariateBox::centered(9, 500.0);
  double worst = 0.0;
  for (size_t i = 0; i < rows.size(); ++i) {
    const Vec g = cost_weights(schema, icfg, pct[i]);
    AgentType agent;
    agent.z = invert_raw_covariates(rows[i], g, icfg);
    agent.cost.g = g;
    const auto br = best_response(agent, icfg.beta_bar, icfg.s_bar, noise, box);
    worst = std::max(worst, (br.x - rows[i].x_star).cwiseAbs().maxCoeff());
  }

  // Deterministic K = 8 clustering.
  const auto dist = ingest_pipeline(rows, schema, icfg);
  const auto dist2 = ingest_pipeline(rows, schema, icfg);
  const bool deterministic =
      dist.types.size() == 8 &&
      dist.to_json_string() == dist2.to_json_string();

  // End-to-end learning on the ingested distribution.
  std::vector<double> comp_v, strat_v;
  for (std::uint64_t seed = 31; seed <= 33; ++seed) {
    for (const auto method :
         {LearnMethod::CompetitionAware, LearnMethod::StrategyAware}) {
      LearnConfig cfg;
      cfg.epochs = 25;
      cfg.lr = 0.1;
      cfg.method = method;
      cfg.init_beta = icfg.beta_bar;
      cfg.equilibrate_steps = 25;
      cfg.sim = make_sim(dist, 120000, seed, 0.025, 0.2);
      cfg.with_oracle = false;
      const auto trace = learn(dist, cfg);
      (method == LearnMethod::CompetitionAware ? comp_v : strat_v)
          .push_back(equilibrium_policy_value(dist, trace.final_beta, kQ));
    }
  }
  const bool ordering = median(comp_v) >= median(strat_v);
  const bool pass = worst <= 1e-8 && deterministic && ordering;
  return {pass, fmt("round-trip max %.2e (<=1e-8), K=8 deterministic: %s, "
                    "median V comp %.3f >= strat %.3f: %s",
                    worst, deterministic ? "yes" : "no", median(comp_v),
                    median(strat_v), ordering ? "yes" : "no")};
}

std::pair<bool, std::string> criterion_micro_oracles() {
  // OLS exact recovery.
  Rng rng(1);
  const int n = 4096, k = 4;
  Mat design(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) design(i, j) = rng.next_rademacher();
  Vec truth(k);
  truth << 0.5, -1.25, 2.0, 0.03125;
  std::vector<double> y(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) y[size_t(i)] = 0.025 * design.row(i).dot(truth);
  const double ols_err =
      (ols_rademacher(design, y, 0.025) - truth).cwiseAbs().maxCoeff();

  // KDE point mass.
  const std::vector<double> point(100, 3.0);
  const bool point_exact = kde_box(point, 3.0, 0.2) == 1.0 / 0.2;

  // KDE vs the analytic density at the toy equilibrium threshold, n = 1e6.
  const auto toy = make_toy_distribution();
  const Vec beta = theta_beta(0.6);
  const double s_star = meanfield_fixed_point(toy, beta, kQ).s_star;
  const auto omega = expected_scores(toy, beta, s_star);
  std::vector<double> cum(omega.size());
  std::partial_sum(toy.probs.data(), toy.probs.data() + toy.probs.size(),
                   cum.begin());
  Rng mc(77);
  std::vector<double> scores(1000000);
  for (auto& sc : scores) {
    const double u = mc.next_double();
    size_t t = 0;
    while (t + 1 < cum.size() && u > cum[t]) ++t;
    sc = omega[t] + toy.noise.sigma * mc.next_normal();
  }
  const double analytic = score_pdf(toy, beta, s_star, s_star);
  const double est = kde_box(scores, s_star, default_bandwidth(scores));
  const double kde_rel = std::abs(est - analytic) / analytic;

  const bool pass = ols_err < 1e-12 && point_exact && kde_rel <= 0.05;
  return {pass, fmt("OLS exact to %.1e, point-mass KDE exact: %s, KDE vs "
                    "analytic density rel err %.3f (<=0.05)",
                    ols_err, point_exact ? "yes" : "no", kde_rel)};
}

}  // namespace

int main() {
  std::setvbuf(stdout, nullptr, _IOLBF, 0);
  std::printf("acceptance suite\n----------------\n");

  run(1, "FOC property suite", criterion_foc);
  run(2, "Figure-1 noise regimes", criterion_figure1);
  run(3, "mean-field equilibria", criterion_equilibria);
  run(4, "finite-sample concentration", criterion_concentration);
  run(5, "gradient-estimator consistency", criterion_gradient_consistency);
  run(6, "analytic threshold gradient", criterion_threshold_gradient);

  // The two learning benchmarks share the toy optimum computation.
  const auto toy = make_toy_distribution();
  double v_star = 0.0, theta_star = 0.0;
  std::tie(theta_star, v_star) = toy_optimum(toy);
  std::printf("     toy optimum: theta* = %.4f, V* = %.5f\n", theta_star,
              v_star);

  Table2Result t2;
  run(7, "two-dimensional benchmark", [&] {
    t2 = run_table2(toy, v_star);
    return criterion_table2(toy, t2);
  });
  run(8, "above-threshold composition", [&] {
    if (t2.cap_beta.size() == 0)
      return std::make_pair(false, std::string("capacity policy unavailable"));
    return criterion_shares(toy, t2.cap_beta);
  });
  run(9, "ten-dimensional benchmark", criterion_table3);
  run(10, "ingestion pipeline", criterion_ingest);
  run(11, "estimator micro-oracles", criterion_micro_oracles);

  std::printf("----------------\n%s (%d failure%s)\n",
              g_failures == 0 ? "ALL CRITERIA PASS" : "FAILURES PRESENT",
              g_failures, g_failures == 1 ? "" : "s");
  return g_failures == 0 ? 0 : 1;
}
