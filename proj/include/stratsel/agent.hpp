#pragma once

#include "stratsel/types.hpp"

// Per-agent layer: expected utility, best responses, expected scores, and
// noise-regime classification for the quadratic-cost model.
//
// For quadratic cost the first-order condition
//     2 Diag(g) (x - z) = phi_sigma(s - beta'x) beta
// reduces to a scalar equation in the expected score m = beta'x:
//     m = beta'z + (phi_sigma(s - m) / 2) * beta' Diag(g)^-1 beta,
// after which x = z + (phi_sigma(s - m) / 2) Diag(g)^-1 beta.

namespace stratsel {

enum class NoiseRegime { Discontinuous, Continuous, Contraction };

// Classification against the thresholds 1/(alpha sqrt(2 pi e)) and
// 2/(alpha sqrt(2 pi e)) for sigma^2.
NoiseRegime classify_noise_regime(const CostSpec& cost, const NoiseModel& noise);

struct BestResponse {
  Vec x;
  double score = 0.0;        // beta' x
  bool boundary_clamped = false;
};

double expected_utility(const AgentType& agent, const Vec& x,
                        const Policy& policy, const NoiseModel& noise);

// Unique best response. Throws RegimeError unless
// sigma^2 > 1/(alpha sqrt(2 pi e)) for this agent's cost.
BestResponse best_response(const AgentType& agent, const Vec& beta, double s,
                           const NoiseModel& noise, const CovariateBox& box);

// Best response without the uniqueness guard: enumerates all roots of the
// scalar equation by bracketed bisection over 512 subintervals and returns
// the utility-maximal one (ties toward the smaller expected score). This is
// what low-noise diagnostics use; in the uniqueness regime it agrees with
// best_response.
BestResponse best_response_multimodal(const AgentType& agent, const Vec& beta,
                                      double s, const NoiseModel& noise,
                                      const CovariateBox& box);

// omega(s; beta) = beta' x*(beta, s).
double expected_score(const AgentType& agent, const Vec& beta, double s,
                      const NoiseModel& noise, const CovariateBox& box);

// Closed-form d omega / d s. With H = 2 Diag(g) and u = s - omega:
//   d omega / d s = phi'(u) b'H^-1 b / (1 + phi'(u) b'H^-1 b).
double score_derivative(const AgentType& agent, const Vec& beta, double s,
                        const NoiseModel& noise, const CovariateBox& box);

// Gradient of omega with respect to beta (free coordinates, s held fixed),
// from implicit differentiation of the scalar reduction:
//   grad = (z + phi(u) Diag(g)^-1 beta) / (1 + phi'(u) beta'Diag(g)^-1 beta / 2).
Vec score_beta_gradient(const AgentType& agent, const Vec& beta, double s,
                        const NoiseModel& noise, const CovariateBox& box);

namespace detail {

// Scalar reduction of the FOC for one (agent, beta) pair.
struct ScoreProblem {
  double base = 0.0;  // beta' z
  double quad = 0.0;  // A = beta' Diag(g)^-1 beta
  double sigma = 1.0;
};

ScoreProblem make_score_problem(const Vec& z, const Vec& g, const Vec& beta,
                                double sigma);

struct ScoreSolution {
  double m = 0.0;    // expected score beta' x*
  double phi = 0.0;  // phi_sigma(s - m)
};

// Safeguarded Newton with bisection fallback; requires the single-root
// condition (A/2) * sup|phi'| < 1, which holds whenever
// sigma^2 > 1/(alpha sqrt(2 pi e)).
ScoreSolution solve_score(const ScoreProblem& p, double s);

// Root enumeration for the low-noise case; picks the root with the highest
// expected utility, ties toward smaller m.
ScoreSolution solve_score_multimodal(const ScoreProblem& p, double s);

// True when the scalar equation is guaranteed single-rooted for this problem.
bool single_root_guaranteed(const ScoreProblem& p);

}  // namespace detail

}  // namespace stratsel
