#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "stratsel/population.hpp"
#include "stratsel/rng.hpp"

// Finite-population layer: i.i.d. sampling from the type distribution,
// empirical thresholds, the stochastic threshold dynamics, and the
// unit-level perturbation round the gradient estimators consume.

namespace stratsel {

struct SimConfig {
  int n = 1000;            // agents per step
  CapacitySpec q;
  double b_beta = 0.0;     // perturbation size applied to beta
  double b_s = 0.0;        // perturbation size applied to the threshold
  double trunc_d = 0.0;    // threshold state confined to [-trunc_d, trunc_d]
  std::uint64_t seed = 0;
  double outcome_noise = 0.0;  // sd of optional additive noise on outcomes

  void validate() const {
    if (n < 1) throw InvalidInputError("sim: n must be >= 1");
    q.validate();
    if (b_beta < 0.0 || b_s < 0.0)
      throw InvalidInputError("sim: perturbation sizes must be nonnegative");
    if (!(trunc_d > 0.0))
      throw InvalidInputError("sim: truncation bound must be positive");
    if (outcome_noise < 0.0)
      throw InvalidInputError("sim: outcome noise must be nonnegative");
  }
};

// 10 plus the largest raw-score quantile magnitude over a coarse grid of
// selection criteria; wide enough that the mean-field threshold fits.
double default_truncation_bound(const TypeDistribution& dist,
                                const CapacitySpec& q);

struct AgentDraw {
  int type = 0;
  Vec eps;
};

// n i.i.d. draws of (type index, reporting noise); deterministic given seed.
std::vector<AgentDraw> sample_agents(const TypeDistribution& dist, int n,
                                     std::uint64_t seed);

// Order statistic at rank ceil(q n), 1-indexed in the ascending sort.
double empirical_quantile(const std::vector<double>& scores,
                          const CapacitySpec& q);

// One experiment round under per-agent Rademacher perturbations.
struct ExperimentRecord {
  int n = 0;
  double s_prev = 0.0;
  double r_realized = 0.0;  // empirical q-quantile of the perturbed scores
  double b_beta = 0.0;
  double b_s = 0.0;
  double q = 0.0;

  Mat zeta;                    // n x d, entries +-1
  std::vector<int> xi;         // +-1
  Mat x;                       // reported covariates X_i
  std::vector<double> score;   // beta_i' X_i - b_s xi_i
  std::vector<std::uint8_t> w;       // treated under agent-specific cutoff
  std::vector<double> y;       // observed outcome
  std::vector<std::uint8_t> i_ind;   // above the unperturbed threshold r
  std::vector<int> type_idx;   // diagnostic; not part of the CSV schema

  double mean_outcome() const;
  void write_csv(std::ostream& out) const;
  std::string sidecar_json() const;
};

// Threshold trace S^1..S^t of the stochastic fixed-point dynamics. Fresh
// agents each step; per-agent perturbations when b > 0; every iterate is
// clamped to [-trunc_d, trunc_d]. stream_offset separates the RNG streams of
// consecutive phases (equilibration vs. measurement) in a larger protocol.
std::vector<double> stochastic_fpi(const TypeDistribution& dist,
                                   const Vec& beta, const SimConfig& cfg,
                                   double s0, int t_steps,
                                   std::uint64_t stream_offset = 0);

ExperimentRecord run_perturbed_round(const TypeDistribution& dist,
                                     const Vec& beta, const SimConfig& cfg,
                                     double s_prev,
                                     std::uint64_t stream_id = 0);

}  // namespace stratsel
