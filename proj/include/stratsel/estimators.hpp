#pragma once

#include <string>
#include <vector>

#include "stratsel/finite_sim.hpp"

// Regression-based gradient estimation from one perturbation round: OLS of
// outcomes/indicators on the Rademacher designs, a box-kernel density
// estimate at the realized threshold, and the assembled model, equilibrium,
// and policy gradients.

namespace stratsel {

// b^-1 (n^-1 sum zeta zeta')^-1 (n^-1 sum zeta y). The design holds the raw
// +-1 entries, not b * zeta.
Vec ols_rademacher(const Mat& design, const std::vector<double>& response,
                   double b);

// Box-kernel density estimate (1/(n h)) sum 1[(at - s_i)/h in [-1/2, 1/2)).
double kde_box(const std::vector<double>& scores, double at, double h);

// 1.06 * sd(scores) * n^(-1/3).
double default_bandwidth(const std::vector<double>& scores);

struct GradientReport {
  Vec model_grad;
  Vec eq_grad;
  Vec policy_grad;       // model_grad + eq_grad, exactly
  Vec gamma_y_beta;
  double gamma_y_s = 0.0;
  Vec gamma_pi_beta;
  double gamma_pi_s = 0.0;
  double density_hat = 0.0;
  double bandwidth = 0.0;
  bool degenerate_denominator = false;

  std::string to_json_string(int indent = 2) const;
};

Vec model_gradient(const ExperimentRecord& record, double b_beta);

// tau_EG = Gamma_{Y,s,r} * Gamma_{Pi,beta} / (p_hat - Gamma_{Pi,s}).
// Throws IllConditionedError when |p_hat - Gamma_{Pi,s}| < 1e-8.
Vec equilibrium_gradient(const ExperimentRecord& record, double b_beta,
                         double b_s, double h = 0.0);

// Full report; h <= 0 selects the default bandwidth. The degenerate flag is
// set when |p_hat - Gamma_{Pi,s}| < max(1e-8, 0.01 p_hat).
GradientReport policy_gradient(const ExperimentRecord& record, double b_beta,
                               double b_s, double h = 0.0);

}  // namespace stratsel
