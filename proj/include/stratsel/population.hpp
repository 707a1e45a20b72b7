#pragma once

#include <string>
#include <vector>

#include "stratsel/agent.hpp"
#include "stratsel/types.hpp"

// Mean-field layer over a finite-support type distribution: induced score
// distribution, quantile map, fixed-point equilibrium, policy value, and the
// analytic threshold sensitivity ds/dbeta.

namespace stratsel {

struct TypeDistribution {
  std::vector<AgentType> types;
  Vec probs;
  NoiseModel noise;
  CovariateBox box;
  std::vector<std::vector<std::string>> tags;  // optional, parallel to types

  Eigen::Index dim() const { return types.empty() ? 0 : types.front().z.size(); }
  double alpha_star() const;
  void validate() const;

  // Mask of types carrying the given tag.
  std::vector<bool> tag_mask(const std::string& tag) const;

  std::string to_json_string(int indent = 2) const;
  static TypeDistribution from_json_string(const std::string& text);
  static TypeDistribution load_json(const std::string& path);
  void save_json(const std::string& path) const;
};

struct CapacitySpec {
  double q = 0.7;  // treated fraction is 1 - q

  void validate() const {
    if (!(q > 0.0 && q < 1.0))
      throw InvalidInputError("capacity: q must lie in (0, 1)");
  }
};

struct EquilibriumResult {
  double s_star = 0.0;
  int iterations = 0;
  double residual = 0.0;
  double kappa_hat = 0.0;
};

// Expected scores omega_k(s; beta) for every type. Checks the uniqueness
// regime for the whole support once.
std::vector<double> expected_scores(const TypeDistribution& dist,
                                    const Vec& beta, double s);

// P(beta, s)(r) = sum_k p_k Phi_sigma(r - omega_k).
double score_cdf(const TypeDistribution& dist, const Vec& beta, double s,
                 double r);

// p(beta, s)(r) = sum_k p_k phi_sigma(r - omega_k).
double score_pdf(const TypeDistribution& dist, const Vec& beta, double s,
                 double r);

// r with P(beta, s)(r) = q, by bracketed bisection to 1e-12.
double quantile(const TypeDistribution& dist, const Vec& beta, double s,
                const CapacitySpec& q);

// Quantile of the raw-score mixture sum_k p_k N(beta'z_k, sigma^2), i.e. the
// score distribution if agents reported their raw covariates. Used for
// truncation-bound defaults and large-noise oracles.
double raw_score_quantile(const TypeDistribution& dist, const Vec& beta,
                          const CapacitySpec& q);

// Iterates s_t = quantile(beta, s_{t-1}) until the step falls below tol.
EquilibriumResult meanfield_fixed_point(const TypeDistribution& dist,
                                        const Vec& beta, const CapacitySpec& q,
                                        double s0 = 0.0, double tol = 1e-10,
                                        int max_iter = 10000);

// Equilibrium threshold via plain iteration, falling back to bracketed
// bisection on s - quantile(beta, s) when the iteration cycles. The fixed
// point exists and is unique already in the uniqueness regime; only the
// convergence of plain iteration needs the stronger contraction condition.
double equilibrium_threshold(const TypeDistribution& dist, const Vec& beta,
                             const CapacitySpec& q, double tol = 1e-12);

// V(beta, s, r) = sum_k p_k [y0_k + Delta_k (1 - Phi_sigma(r - omega_k(s)))].
// s is the threshold agents responded to, r the one enforcing capacity.
double policy_value(const TypeDistribution& dist, const Vec& beta, double s,
                    double r);

// V(beta, s(beta), s(beta)).
double equilibrium_policy_value(const TypeDistribution& dist, const Vec& beta,
                                const CapacitySpec& q);

// Analytic ds/dbeta at the equilibrium:
//   ds/dbeta = dPi/dbeta / (p(s*) - dPi/ds),    Pi = 1 - P,
// with the partials assembled from per-type pieces
//   dPi/ds    = sum_k p_k phi_sigma(s* - omega_k) * (d omega_k / d s)
//   dPi/dbeta = sum_k p_k phi_sigma(s* - omega_k) * grad_beta omega_k.
Vec threshold_gradient(const TypeDistribution& dist, const Vec& beta,
                       const CapacitySpec& q);

// Fraction of above-threshold probability mass belonging to masked types at
// the equilibrium threshold.
double natural_share_above(const TypeDistribution& dist, const Vec& beta,
                           const CapacitySpec& q,
                           const std::vector<bool>& group_mask);

// Model/equilibrium/policy gradients of the mean-field value, used as the
// analytic oracle for the experiment-based estimators. All evaluated at
// s = r = s(beta); "model" holds the thresholds fixed, "equilibrium" is
// (dV/ds + dV/dr) * ds/dbeta.
struct ValueGradients {
  double s_star = 0.0;
  Vec model;        // dV/dbeta at fixed thresholds
  double dv_ds = 0.0;
  double dv_dr = 0.0;
  Vec ds_dbeta;
  Vec equilibrium;  // (dv_ds + dv_dr) * ds_dbeta
  Vec total;        // model + equilibrium
};

ValueGradients value_gradients(const TypeDistribution& dist, const Vec& beta,
                               const CapacitySpec& q);

}  // namespace stratsel
