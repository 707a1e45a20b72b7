#include "stratsel/agent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "stratsel/gauss.hpp"

namespace stratsel {

namespace detail {

ScoreProblem make_score_problem(const Vec& z, const Vec& g, const Vec& beta,
                                double sigma) {
  ScoreProblem p;
  p.base = beta.dot(z);
  p.quad = (beta.array().square() / g.array()).sum();
  p.sigma = sigma;
  return p;
}

bool single_root_guaranteed(const ScoreProblem& p) {
  // f(m) = base + (A/2) phi(s - m) - m has slope -(A/2) phi'(s - m) - 1,
  // which stays negative iff (A/2) sup|phi'| < 1.
  const double max_dphi = 1.0 / (p.sigma * p.sigma * sqrt_two_pi_e());
  return 0.5 * p.quad * max_dphi < 1.0;
}

namespace {

inline double residual(const ScoreProblem& p, double s, double m) {
  return p.base + 0.5 * p.quad * normal_pdf(s - m, p.sigma) - m;
}

double bisect_root(const ScoreProblem& p, double s, double lo, double hi,
                   double flo) {
  // flo > 0 > f(hi) on entry (f decreasing across the root).
  for (int i = 0; i < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = residual(p, s, mid);
    if (fm > 0.0) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  (void)flo;
  return 0.5 * (lo + hi);
}

}  // namespace

ScoreSolution solve_score(const ScoreProblem& p, double s) {
  const double phi_max = 1.0 / (p.sigma * sqrt_two_pi());
  const double lo0 = p.base;
  const double hi0 = p.base + 0.5 * p.quad * phi_max;

  double lo = lo0, hi = hi0;
  double m = p.base;  // f(base) >= 0, so the root lies in [base, hi0]
  double f = residual(p, s, m);
  for (int iter = 0; iter < 80; ++iter) {
    if (std::abs(f) < 1e-13) break;
    if (f > 0.0)
      lo = std::max(lo, m);
    else
      hi = std::min(hi, m);
    const double u = s - m;
    const double fprime = -0.5 * p.quad * normal_pdf_deriv(u, p.sigma) - 1.0;
    double next = m - f / fprime;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    m = next;
    f = residual(p, s, m);
  }
  return {m, normal_pdf(s - m, p.sigma)};
}

ScoreSolution solve_score_multimodal(const ScoreProblem& p, double s) {
  const double phi_max = 1.0 / (p.sigma * sqrt_two_pi());
  const double lo = p.base;
  const double hi = p.base + 0.5 * p.quad * phi_max;

  // Collect every sign change of f over 512 subintervals of the bracket.
  constexpr int kCells = 512;
  std::vector<double> roots;
  double prev_m = lo;
  double prev_f = residual(p, s, prev_m);
  if (std::abs(prev_f) < 1e-13) roots.push_back(prev_m);
  for (int i = 1; i <= kCells; ++i) {
    const double m = lo + (hi - lo) * double(i) / kCells;
    const double f = residual(p, s, m);
    if (std::abs(f) < 1e-13) {
      roots.push_back(m);
    } else if (prev_f > 0.0 && f < 0.0) {
      roots.push_back(bisect_root(p, s, prev_m, m, prev_f));
    } else if (prev_f < 0.0 && f > 0.0) {
      // f rising through zero: bisect with the roles swapped.
      double a = prev_m, b = m;
      for (int it = 0; it < 200 && b - a > 1e-15 * (1.0 + std::abs(b)); ++it) {
        const double mid = 0.5 * (a + b);
        (residual(p, s, mid) < 0.0 ? a : b) = mid;
      }
      roots.push_back(0.5 * (a + b));
    }
    prev_m = m;
    prev_f = f;
  }
  if (roots.empty()) return solve_score(p, s);

  // Expected utility at the reconstructed point for root m:
  //   U(m) = -(phi/2)^2 A + 1 - Phi_sigma(s - m).
  // Roots come out ascending, so keeping strict improvements only breaks
  // utility ties toward the smaller expected score.
  double best_m = roots.front();
  double best_u = -std::numeric_limits<double>::infinity();
  for (double m : roots) {
    const double phi = normal_pdf(s - m, p.sigma);
    const double util =
        -0.25 * phi * phi * p.quad + 1.0 - normal_cdf(s - m, p.sigma);
    if (util > best_u + 1e-12) {
      best_u = util;
      best_m = m;
    }
  }
  return {best_m, normal_pdf(s - best_m, p.sigma)};
}

}  // namespace detail

NoiseRegime classify_noise_regime(const CostSpec& cost, const NoiseModel& noise) {
  cost.validate();
  noise.validate();
  const double var = noise.sigma * noise.sigma;
  const double t1 = 1.0 / (cost.alpha() * sqrt_two_pi_e());
  if (var > 2.0 * t1) return NoiseRegime::Contraction;
  if (var > t1) return NoiseRegime::Continuous;
  return NoiseRegime::Discontinuous;
}

double expected_utility(const AgentType& agent, const Vec& x,
                        const Policy& policy, const NoiseModel& noise) {
  policy.validate();
  noise.validate();
  agent.cost.validate();
  if (x.size() != agent.z.size() || x.size() != policy.beta.size())
    throw InvalidInputError("expected_utility: dimension mismatch");
  const Vec dev = x - agent.z;
  const double cost = (agent.cost.g.array() * dev.array().square()).sum();
  return -cost + 1.0 - normal_cdf(policy.threshold - policy.beta.dot(x),
                                  noise.sigma);
}

namespace {

BestResponse reconstruct(const AgentType& agent, const Vec& beta,
                         const detail::ScoreSolution& sol,
                         const CovariateBox& box) {
  BestResponse br;
  br.x = agent.z +
         (0.5 * sol.phi) * (beta.array() / agent.cost.g.array()).matrix();
  if (!box.contains(br.x, 1e-9)) {
    br.boundary_clamped = true;
    br.x = br.x.cwiseMax(box.lo).cwiseMin(box.hi);
  }
  br.score = beta.dot(br.x);
  return br;
}

void check_inputs(const AgentType& agent, const Vec& beta,
                  const NoiseModel& noise, const CovariateBox& box) {
  noise.validate();
  box.validate();
  agent.validate(box);
  if (beta.size() != agent.z.size())
    throw InvalidInputError("best_response: beta dimension mismatch");
}

}  // namespace

BestResponse best_response(const AgentType& agent, const Vec& beta, double s,
                           const NoiseModel& noise, const CovariateBox& box) {
  check_inputs(agent, beta, noise, box);
  const double var = noise.sigma * noise.sigma;
  if (!(var * agent.cost.alpha() * sqrt_two_pi_e() > 1.0))
    throw RegimeError(
        "best_response: sigma^2 below the uniqueness threshold "
        "1/(alpha sqrt(2 pi e))");
  const auto p = detail::make_score_problem(agent.z, agent.cost.g, beta,
                                            noise.sigma);
  return reconstruct(agent, beta, detail::solve_score(p, s), box);
}

BestResponse best_response_multimodal(const AgentType& agent, const Vec& beta,
                                      double s, const NoiseModel& noise,
                                      const CovariateBox& box) {
  check_inputs(agent, beta, noise, box);
  const auto p = detail::make_score_problem(agent.z, agent.cost.g, beta,
                                            noise.sigma);
  const auto sol = detail::single_root_guaranteed(p)
                       ? detail::solve_score(p, s)
                       : detail::solve_score_multimodal(p, s);
  return reconstruct(agent, beta, sol, box);
}

double expected_score(const AgentType& agent, const Vec& beta, double s,
                      const NoiseModel& noise, const CovariateBox& box) {
  return best_response(agent, beta, s, noise, box).score;
}

double score_derivative(const AgentType& agent, const Vec& beta, double s,
                        const NoiseModel& noise, const CovariateBox& box) {
  const BestResponse br = best_response(agent, beta, s, noise, box);
  if (br.boundary_clamped)
    throw InvalidInputError(
        "score_derivative: best response clamped at the covariate box");
  const double half_quad =
      0.5 * (beta.array().square() / agent.cost.g.array()).sum();
  const double dphi = normal_pdf_deriv(s - br.score, noise.sigma);
  return dphi * half_quad / (1.0 + dphi * half_quad);
}

Vec score_beta_gradient(const AgentType& agent, const Vec& beta, double s,
                        const NoiseModel& noise, const CovariateBox& box) {
  const BestResponse br = best_response(agent, beta, s, noise, box);
  if (br.boundary_clamped)
    throw InvalidInputError(
        "score_beta_gradient: best response clamped at the covariate box");
  const double u = s - br.score;
  const double half_quad =
      0.5 * (beta.array().square() / agent.cost.g.array()).sum();
  const double denom = 1.0 + normal_pdf_deriv(u, noise.sigma) * half_quad;
  const Vec num = agent.z + normal_pdf(u, noise.sigma) *
                                (beta.array() / agent.cost.g.array()).matrix();
  return num / denom;
}

}  // namespace stratsel
