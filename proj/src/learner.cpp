#include "stratsel/learner.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

namespace stratsel {

namespace {

Vec random_unit(Eigen::Index d, std::uint64_t seed) {
  Rng rng = Rng::substream(seed, 0, 0, 0xB7u);
  Vec v(d);
  for (int attempt = 0; attempt < 16; ++attempt) {
    for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.next_normal();
    if (v.norm() > 1e-9) return v / v.norm();
  }
  throw NumericalError("random_unit: degenerate draws");
}

}  // namespace

LearnTrace learn(const TypeDistribution& dist, const LearnConfig& cfg) {
  dist.validate();
  cfg.validate();
  const Eigen::Index d = dist.dim();

  Vec beta = cfg.init_beta ? *cfg.init_beta : random_unit(d, cfg.sim.seed);
  if (beta.size() != d)
    throw InvalidInputError("learn: init_beta dimension mismatch");
  beta = project_sphere(beta);

  LearnTrace trace;
  double s_state = 0.0;
  std::optional<Vec> prev_eq_grad;

  // Streams: epoch j uses steps [j*(E+1), j*(E+1)+E) for equilibration and
  // j*(E+1)+E for the measurement round.
  const std::uint64_t block = std::uint64_t(cfg.equilibrate_steps) + 1;

  for (int j = 0; j < cfg.epochs; ++j) {
    const std::uint64_t base = std::uint64_t(j) * block;
    const auto path =
        stochastic_fpi(dist, beta, cfg.sim, s_state, cfg.equilibrate_steps,
                       base);
    const double s_eq = path.back();
    const ExperimentRecord rec = run_perturbed_round(
        dist, beta, cfg.sim, s_eq, base + std::uint64_t(cfg.equilibrate_steps));
    s_state = std::clamp(rec.r_realized, -cfg.sim.trunc_d, cfg.sim.trunc_d);

    EpochLog log;
    log.beta = beta;
    log.s_eq = s_eq;
    log.v_hat = rec.mean_outcome();
    if (cfg.with_oracle)
      log.v_eq_oracle = equilibrium_policy_value(dist, beta, cfg.sim.q);

    GradientReport rep;
    try {
      rep = policy_gradient(rec, cfg.sim.b_beta, cfg.sim.b_s,
                            cfg.kde_bandwidth);
      if (rep.degenerate_denominator && prev_eq_grad) {
        rep.eq_grad = *prev_eq_grad;
        rep.policy_grad = rep.model_grad + rep.eq_grad;
        log.eq_grad_reused = true;
      }
    } catch (const IllConditionedError&) {
      rep.model_grad = model_gradient(rec, cfg.sim.b_beta);
      rep.gamma_y_beta = rep.model_grad;
      if (prev_eq_grad) {
        rep.eq_grad = *prev_eq_grad;
        log.eq_grad_reused = true;
      } else {
        rep.eq_grad = Vec::Zero(d);
      }
      rep.policy_grad = rep.model_grad + rep.eq_grad;
      rep.gamma_pi_beta = Vec::Zero(d);
      rep.degenerate_denominator = true;
      log.eq_grad_reused = log.eq_grad_reused || prev_eq_grad.has_value();
    }
    if (!rep.degenerate_denominator) prev_eq_grad = rep.eq_grad;

    const Vec step_dir = cfg.method == LearnMethod::CompetitionAware
                             ? rep.policy_grad
                             : rep.model_grad;
    try {
      beta = project_sphere(beta + cfg.lr * step_dir);
    } catch (const DegenerateStepError&) {
      log.update_skipped = true;  // keep the previous criterion
    }

    log.report = std::move(rep);
    trace.epochs.push_back(std::move(log));
  }

  trace.final_beta = beta;
  if (cfg.with_oracle)
    trace.final_v_eq = equilibrium_policy_value(dist, beta, cfg.sim.q);
  return trace;
}

Vec capacity_aware_baseline(const TypeDistribution& dist, int n_rct,
                            const CapacitySpec& q, std::uint64_t seed,
                            RctObservation obs) {
  dist.validate();
  q.validate();
  const Eigen::Index d = dist.dim();
  if (n_rct < 10 * d)
    throw InvalidInputError("capacity baseline: n_rct must be >= 10 d");

  // Per-arm OLS of Y on [1, X]; agents are non-strategic here, X = Z + eps.
  Mat xtx0 = Mat::Zero(d + 1, d + 1), xtx1 = Mat::Zero(d + 1, d + 1);
  Vec xty0 = Vec::Zero(d + 1), xty1 = Vec::Zero(d + 1);

  std::vector<double> cum(size_t(dist.probs.size()));
  {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < dist.probs.size(); ++k) {
      acc += dist.probs[k];
      cum[size_t(k)] = acc;
    }
    cum.back() = 1.0;
  }

  Vec row(d + 1);
  for (int i = 0; i < n_rct; ++i) {
    Rng rng = Rng::substream(seed, 0, std::uint64_t(i), 0x2Cu);
    const double u = rng.next_double();
    const std::uint64_t bits = rng.next_u64();
    const auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const int type =
        int(std::min<std::ptrdiff_t>(it - cum.begin(), cum.size() - 1));
    const auto& agent = dist.types[size_t(type)];
    row[0] = 1.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double eps = dist.noise.sigma * rng.next_normal();
      row[j + 1] =
          agent.z[j] + (obs == RctObservation::NoisyReports ? eps : 0.0);
    }
    const bool treated = (bits >> 63) & 1u;
    const double y = treated ? agent.y1 : agent.y0;
    if (treated) {
      xtx1 += row * row.transpose();
      xty1 += row * y;
    } else {
      xtx0 += row * row.transpose();
      xty0 += row * y;
    }
  }

  Eigen::FullPivLU<Mat> lu1(xtx1), lu0(xtx0);
  if (!lu1.isInvertible() || !lu0.isInvertible())
    throw RankError("capacity baseline: rank-deficient arm design");
  const Vec coef1 = lu1.solve(xty1);
  const Vec coef0 = lu0.solve(xty0);
  const Vec slope_diff = coef1.tail(d) - coef0.tail(d);
  if (slope_diff.norm() < 1e-10)
    throw DegenerateStepError(
        "capacity baseline: CATE slope is numerically zero");
  return project_sphere(slope_diff);
}

}  // namespace stratsel
