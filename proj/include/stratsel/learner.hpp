#pragma once

#include <optional>
#include <vector>

#include "stratsel/estimators.hpp"
#include "stratsel/sphere.hpp"

// Policy optimization: projected gradient ascent on the unit sphere driven by
// the perturbation-round estimators, plus the capacity-aware RCT baseline.

namespace stratsel {

enum class LearnMethod { CompetitionAware, StrategyAware };

struct LearnConfig {
  int epochs = 100;
  double lr = 0.5;
  SimConfig sim;                 // perturbation sizes must be positive
  int equilibrate_steps = 50;    // rounds of the stochastic dynamics per epoch
  LearnMethod method = LearnMethod::CompetitionAware;
  std::optional<Vec> init_beta;  // nullopt: random unit vector from sim.seed
  double kde_bandwidth = 0.0;    // <= 0: default rule
  bool with_oracle = true;       // log the mean-field value of each iterate

  void validate() const {
    if (epochs < 0) throw InvalidInputError("learn: epochs must be >= 0");
    if (!(lr > 0.0)) throw InvalidInputError("learn: learning rate must be > 0");
    if (equilibrate_steps < 1)
      throw InvalidInputError("learn: equilibrate_steps must be >= 1");
    sim.validate();
    if (!(sim.b_beta > 0.0 && sim.b_s > 0.0))
      throw InvalidInputError("learn: perturbation sizes must be positive");
  }
};

struct EpochLog {
  Vec beta;                    // criterion deployed this epoch
  double s_eq = 0.0;           // equilibrated threshold
  GradientReport report;
  double v_hat = 0.0;          // realized mean outcome in the round
  std::optional<double> v_eq_oracle;
  bool update_skipped = false;
  bool eq_grad_reused = false;
};

struct LearnTrace {
  std::vector<EpochLog> epochs;
  Vec final_beta;
  std::optional<double> final_v_eq;
};

LearnTrace learn(const TypeDistribution& dist, const LearnConfig& cfg);

// What the RCT regression sees for each (non-strategic) participant. Raw
// covariates identify the CATE slope exactly but need enough distinct
// support points for a full-rank design; noisy reports (Z + eps) are always
// full rank at the cost of attenuating the slope toward correlated
// coordinates.
enum class RctObservation { RawCovariates, NoisyReports };

// RCT baseline: random treatment on non-strategic agents, per-arm linear
// regression with intercept, CATE slope = slope(treated) - slope(control),
// projected to the sphere.
Vec capacity_aware_baseline(const TypeDistribution& dist, int n_rct,
                            const CapacitySpec& q, std::uint64_t seed,
                            RctObservation obs = RctObservation::NoisyReports);

}  // namespace stratsel
