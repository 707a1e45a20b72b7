#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "stratsel/fixtures.hpp"
#include "stratsel/learner.hpp"
#include "test_util.hpp"

using namespace stratsel;

namespace {

LearnConfig small_config(std::uint64_t seed, LearnMethod method,
                         int epochs = 5, int n = 5000) {
  LearnConfig cfg;
  cfg.epochs = epochs;
  cfg.lr = 0.5;
  cfg.method = method;
  cfg.equilibrate_steps = 15;
  cfg.sim.n = n;
  cfg.sim.q = CapacitySpec{0.7};
  cfg.sim.seed = seed;
  cfg.sim.b_beta = 0.025;
  cfg.sim.b_s = 0.2;
  cfg.sim.trunc_d = 25.0;
  cfg.with_oracle = false;
  return cfg;
}

}  // namespace

TEST_CASE("project_sphere examples") {
  CHECK((project_sphere((Vec(2) << 3.0, 4.0).finished()) -
         (Vec(2) << 0.6, 0.8).finished())
            .cwiseAbs()
            .maxCoeff() < 1e-15);
  const Vec unit = (Vec(2) << 1.0, 0.0).finished();
  CHECK((project_sphere(unit) - unit).cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(project_sphere(Vec::Zero(2)), DegenerateStepError);
}

TEST_CASE("zero epochs echoes the initial criterion") {
  auto toy = make_toy_distribution();
  auto cfg = small_config(1, LearnMethod::CompetitionAware, 0);
  cfg.init_beta = (Vec(2) << 0.6, 0.8).finished();
  const auto trace = learn(toy, cfg);
  CHECK(trace.epochs.empty());
  CHECK((trace.final_beta - *cfg.init_beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("iterates stay unit-norm and the trace is reproducible") {
  auto toy = make_toy_distribution();
  auto cfg = small_config(7, LearnMethod::CompetitionAware, 6);
  const auto t1 = learn(toy, cfg);
  const auto t2 = learn(toy, cfg);
  REQUIRE(t1.epochs.size() == 6);
  for (size_t j = 0; j < t1.epochs.size(); ++j) {
    CHECK(std::abs(t1.epochs[j].beta.norm() - 1.0) <= 1e-12);
    CHECK((t1.epochs[j].beta - t2.epochs[j].beta).cwiseAbs().maxCoeff() == 0.0);
    CHECK(t1.epochs[j].v_hat == t2.epochs[j].v_hat);
    CHECK(t1.epochs[j].s_eq == t2.epochs[j].s_eq);
  }
  CHECK((t1.final_beta - t2.final_beta).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("strategy-aware steps along the model gradient only") {
  auto toy = make_toy_distribution();
  auto comp_cfg = small_config(3, LearnMethod::CompetitionAware, 1);
  auto strat_cfg = small_config(3, LearnMethod::StrategyAware, 1);
  comp_cfg.init_beta = (Vec(2) << 1.0, 0.0).finished();
  strat_cfg.init_beta = comp_cfg.init_beta;
  const auto comp = learn(toy, comp_cfg);
  const auto strat = learn(toy, strat_cfg);
  // Identical round (same seed), different update rule.
  const auto& rep = comp.epochs[0].report;
  const Vec expect_comp = project_sphere(*comp_cfg.init_beta + 0.5 * rep.policy_grad);
  const Vec expect_strat =
      project_sphere(*strat_cfg.init_beta + 0.5 * rep.model_grad);
  CHECK((comp.final_beta - expect_comp).cwiseAbs().maxCoeff() == 0.0);
  CHECK((strat.final_beta - expect_strat).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("learning improves the equilibrium value from the capacity direction") {
  auto toy = make_toy_distribution();
  const CapacitySpec q{0.7};
  auto cfg = small_config(11, LearnMethod::CompetitionAware, 30, 20000);
  cfg.init_beta = (Vec(2) << 1.0, 0.0).finished();
  cfg.with_oracle = true;
  const auto trace = learn(toy, cfg);
  const double v0 = equilibrium_policy_value(toy, *cfg.init_beta, q);
  CHECK(*trace.final_v_eq > v0);
}

TEST_CASE("capacity baseline recovers the raw CATE direction on the toy") {
  auto toy = make_toy_distribution();
  const CapacitySpec q{0.7};
  const Vec cap = capacity_aware_baseline(toy, 1000000, q, 5,
                                          RctObservation::RawCovariates);
  // y1 = z_1 exactly, so the per-arm regression on raw covariates recovers
  // the first coordinate direction.
  CHECK(std::abs(cap[0] - 1.0) < 1e-6);
  CHECK(std::abs(cap[1]) < 1e-6);
  CHECK(std::abs(std::atan2(cap[1], cap[0])) < 1e-6);
}

TEST_CASE("noisy-report RCT attenuates toward correlated coordinates") {
  auto toy = make_toy_distribution();
  const CapacitySpec q{0.7};
  const Vec cap = capacity_aware_baseline(toy, 1000000, q, 5,
                                          RctObservation::NoisyReports);
  // Reporting noise (sigma = 3.3) spreads weight onto the second coordinate.
  CHECK(cap[1] > 0.2);
  CHECK(cap.norm() == doctest::Approx(1.0));
}

TEST_CASE("capacity baseline degenerates without a treatment effect") {
  auto toy = make_toy_distribution();
  for (auto& t : toy.types) {
    t.y0 = 3.0;
    t.y1 = 3.0;
  }
  CHECK_THROWS_AS(capacity_aware_baseline(toy, 100000, CapacitySpec{0.7}, 5),
                  DegenerateStepError);
}

TEST_CASE("capacity baseline input validation") {
  auto toy = make_toy_distribution();
  CHECK_THROWS_AS(capacity_aware_baseline(toy, 10, CapacitySpec{0.7}, 5),
                  InvalidInputError);
}
