#include "stratsel/finite_sim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "stratsel/gauss.hpp"

namespace stratsel {

namespace {

constexpr std::uint64_t kSimSalt = 0x51u;

// Per-agent draw order is pinned: type uniform, one block of sign bits
// (zeta_0..zeta_{d-1}, then xi, bit 63 spare for RCT coins), then d normals.
struct AgentStream {
  double type_u;
  std::uint64_t bits;
  Rng rng;
};

inline AgentStream open_agent_stream(std::uint64_t seed, std::uint64_t step,
                                     std::uint64_t agent) {
  Rng rng = Rng::substream(seed, step, agent, kSimSalt);
  AgentStream s{rng.next_double(), rng.next_u64(), rng};
  return s;
}

inline int pick_type(const std::vector<double>& cum, double u) {
  const auto it = std::upper_bound(cum.begin(), cum.end(), u);
  return int(std::min<std::ptrdiff_t>(it - cum.begin(), cum.size() - 1));
}

std::vector<double> cumulative(const Vec& probs) {
  std::vector<double> cum(probs.size());
  double acc = 0.0;
  for (Eigen::Index k = 0; k < probs.size(); ++k) {
    acc += probs[k];
    cum[size_t(k)] = acc;
  }
  cum.back() = 1.0;
  return cum;
}

inline double sign_bit(std::uint64_t bits, int j) {
  return (bits >> j) & 1u ? 1.0 : -1.0;
}

// Cache key for best-response solves within one step: agents of the same type
// facing the same perturbation pattern share the solve exactly.
inline std::uint64_t solve_key(int type, std::uint64_t bits,
                               std::uint64_t mask) {
  return (std::uint64_t(std::uint32_t(type)) << 32) | (bits & mask);
}

void check_regime(const TypeDistribution& dist) {
  const double var = dist.noise.sigma * dist.noise.sigma;
  if (!(var * dist.alpha_star() * sqrt_two_pi_e() > 1.0))
    throw RegimeError(
        "simulation: some type violates the uniqueness regime "
        "sigma^2 > 1/(alpha sqrt(2 pi e))");
}

void check_truncation(const TypeDistribution& dist, const Vec& beta,
                      const SimConfig& cfg) {
  double s_star;
  try {
    s_star = equilibrium_threshold(dist, beta, cfg.q, 1e-8);
  } catch (const NumericalError&) {
    return;  // no mean-field reference available; cannot validate
  }
  if (std::abs(s_star) > cfg.trunc_d)
    throw InvalidInputError(
        "simulation: truncation bound excludes the mean-field threshold");
}

}  // namespace

double default_truncation_bound(const TypeDistribution& dist,
                                const CapacitySpec& q) {
  dist.validate();
  const Eigen::Index d = dist.dim();
  std::vector<Vec> grid;
  for (Eigen::Index j = 0; j < d; ++j) {
    Vec e = Vec::Zero(d);
    e[j] = 1.0;
    grid.push_back(e);
    grid.push_back(-e);
  }
  // Raw-covariate directions realize the largest raw-score quantiles.
  for (const auto& t : dist.types)
    if (t.z.norm() > 1e-9) {
      grid.push_back(t.z / t.z.norm());
      grid.push_back(-t.z / t.z.norm());
    }
  Rng rng(0x5EEDBA5Eu);
  for (int k = 0; k < 64; ++k) {
    Vec v(d);
    for (Eigen::Index j = 0; j < d; ++j) v[j] = rng.next_normal();
    if (v.norm() > 1e-9) grid.push_back(v / v.norm());
  }
  double worst = 0.0;
  for (const auto& beta : grid)
    worst = std::max(worst, std::abs(raw_score_quantile(dist, beta, q)));
  return 10.0 + worst;
}

std::vector<AgentDraw> sample_agents(const TypeDistribution& dist, int n,
                                     std::uint64_t seed) {
  dist.validate();
  if (n < 1) throw InvalidInputError("sample_agents: n must be >= 1");
  const auto cum = cumulative(dist.probs);
  const Eigen::Index d = dist.dim();
  std::vector<AgentDraw> out;
  out.resize(size_t(n));
  for (int i = 0; i < n; ++i) {
    AgentStream s = open_agent_stream(seed, 0, std::uint64_t(i));
    out[size_t(i)].type = pick_type(cum, s.type_u);
    out[size_t(i)].eps.resize(d);
    for (Eigen::Index j = 0; j < d; ++j)
      out[size_t(i)].eps[j] = dist.noise.sigma * s.rng.next_normal();
  }
  return out;
}

double empirical_quantile(const std::vector<double>& scores,
                          const CapacitySpec& q) {
  q.validate();
  if (scores.empty())
    throw InvalidInputError("empirical_quantile: empty score vector");
  const auto n = std::ptrdiff_t(scores.size());
  auto rank = std::ptrdiff_t(std::ceil(q.q * double(n) - 1e-9));
  rank = std::clamp<std::ptrdiff_t>(rank, 1, n);
  std::vector<double> tmp(scores);
  std::nth_element(tmp.begin(), tmp.begin() + (rank - 1), tmp.end());
  return tmp[size_t(rank - 1)];
}

std::vector<double> stochastic_fpi(const TypeDistribution& dist,
                                   const Vec& beta, const SimConfig& cfg,
                                   double s0, int t_steps,
                                   std::uint64_t stream_offset) {
  dist.validate();
  cfg.validate();
  check_regime(dist);
  if (beta.size() != dist.dim())
    throw InvalidInputError("stochastic_fpi: beta dimension mismatch");
  if (t_steps < 1) throw InvalidInputError("stochastic_fpi: t_steps must be >= 1");
  const Eigen::Index d = dist.dim();
  if (d > 32)
    throw InvalidInputError("stochastic_fpi: more than 32 covariates unsupported");
  check_truncation(dist, beta, cfg);

  const auto cum = cumulative(dist.probs);
  const double sigma = dist.noise.sigma;
  const std::uint64_t mask =
      (cfg.b_beta > 0.0 ? ((std::uint64_t(1) << d) - 1) : 0u) |
      (cfg.b_s > 0.0 ? (std::uint64_t(1) << d) : 0u);

  std::vector<double> trace;
  trace.reserve(size_t(t_steps));
  std::vector<double> scores(size_t(cfg.n));
  std::unordered_map<std::uint64_t, double> m_cache;
  double s = s0;

  for (int t = 0; t < t_steps; ++t) {
    m_cache.clear();
    for (int i = 0; i < cfg.n; ++i) {
      AgentStream st =
          open_agent_stream(cfg.seed, stream_offset + std::uint64_t(t),
                            std::uint64_t(i));
      const int type = pick_type(cum, st.type_u);
      const double xi = sign_bit(st.bits, int(d));

      const std::uint64_t key = solve_key(type, st.bits, mask);
      auto found = m_cache.find(key);
      double m;
      if (found != m_cache.end()) {
        m = found->second;
      } else {
        const auto& agent = dist.types[size_t(type)];
        Vec beta_i = beta;
        if (cfg.b_beta > 0.0)
          for (Eigen::Index j = 0; j < d; ++j)
            beta_i[j] += cfg.b_beta * sign_bit(st.bits, int(j));
        const double s_i = s + cfg.b_s * xi;
        const auto prob = detail::make_score_problem(agent.z, agent.cost.g,
                                                     beta_i, sigma);
        m = detail::solve_score(prob, s_i).m;
        m_cache.emplace(key, m);
      }

      // beta_i' eps without materializing beta_i.
      double noise_score = 0.0;
      for (Eigen::Index j = 0; j < d; ++j) {
        const double bj =
            beta[j] + (cfg.b_beta > 0.0
                           ? cfg.b_beta * sign_bit(st.bits, int(j))
                           : 0.0);
        noise_score += bj * (sigma * st.rng.next_normal());
      }
      scores[size_t(i)] = m + noise_score - cfg.b_s * xi;
    }
    const double raw = empirical_quantile(scores, cfg.q);
    s = std::clamp(raw, -cfg.trunc_d, cfg.trunc_d);
    trace.push_back(s);
  }
  return trace;
}

ExperimentRecord run_perturbed_round(const TypeDistribution& dist,
                                     const Vec& beta, const SimConfig& cfg,
                                     double s_prev, std::uint64_t stream_id) {
  dist.validate();
  cfg.validate();
  check_regime(dist);
  if (beta.size() != dist.dim())
    throw InvalidInputError("run_perturbed_round: beta dimension mismatch");
  const Eigen::Index d = dist.dim();
  if (d > 32)
    throw InvalidInputError(
        "run_perturbed_round: more than 32 covariates unsupported");

  const auto cum = cumulative(dist.probs);
  const double sigma = dist.noise.sigma;
  const std::uint64_t mask =
      (cfg.b_beta > 0.0 ? ((std::uint64_t(1) << d) - 1) : 0u) |
      (cfg.b_s > 0.0 ? (std::uint64_t(1) << d) : 0u);

  ExperimentRecord rec;
  rec.n = cfg.n;
  rec.s_prev = s_prev;
  rec.b_beta = cfg.b_beta;
  rec.b_s = cfg.b_s;
  rec.q = cfg.q.q;
  rec.zeta.resize(cfg.n, d);
  rec.xi.resize(size_t(cfg.n));
  rec.x.resize(cfg.n, d);
  rec.score.resize(size_t(cfg.n));
  rec.w.resize(size_t(cfg.n));
  rec.y.resize(size_t(cfg.n));
  rec.i_ind.resize(size_t(cfg.n));
  rec.type_idx.resize(size_t(cfg.n));

  std::unordered_map<std::uint64_t, Vec> xstar_cache;
  Vec beta_i(d);

  for (int i = 0; i < cfg.n; ++i) {
    AgentStream st =
        open_agent_stream(cfg.seed, stream_id, std::uint64_t(i));
    const int type = pick_type(cum, st.type_u);
    const double xi = sign_bit(st.bits, int(d));
    rec.type_idx[size_t(i)] = type;
    rec.xi[size_t(i)] = int(xi);

    for (Eigen::Index j = 0; j < d; ++j) {
      const double zj = sign_bit(st.bits, int(j));
      rec.zeta(i, j) = zj;
      beta_i[j] = beta[j] + cfg.b_beta * zj;
    }

    const std::uint64_t key = solve_key(type, st.bits, mask);
    auto found = xstar_cache.find(key);
    if (found == xstar_cache.end()) {
      const auto& agent = dist.types[size_t(type)];
      const double s_i = s_prev + cfg.b_s * xi;
      const auto prob =
          detail::make_score_problem(agent.z, agent.cost.g, beta_i, sigma);
      const auto sol = detail::solve_score(prob, s_i);
      Vec xstar =
          agent.z +
          (0.5 * sol.phi) * (beta_i.array() / agent.cost.g.array()).matrix();
      found = xstar_cache.emplace(key, std::move(xstar)).first;
    }

    double dot = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
      const double xj = found->second[j] + sigma * st.rng.next_normal();
      rec.x(i, j) = xj;
      dot += beta_i[j] * xj;
    }
    rec.score[size_t(i)] = dot - cfg.b_s * xi;
  }

  rec.r_realized = empirical_quantile(rec.score, cfg.q);

  for (int i = 0; i < cfg.n; ++i) {
    // W uses the agent-specific cutoff r + b xi, I the shared threshold r;
    // both reduce to comparisons of the shock-adjusted score.
    const double xi = double(rec.xi[size_t(i)]);
    const bool treated = rec.score[size_t(i)] > rec.r_realized;
    const bool above = rec.score[size_t(i)] + cfg.b_s * xi > rec.r_realized;
    rec.w[size_t(i)] = treated ? 1 : 0;
    rec.i_ind[size_t(i)] = above ? 1 : 0;
    const auto& agent = dist.types[size_t(rec.type_idx[size_t(i)])];
    double yi = treated ? agent.y1 : agent.y0;
    if (cfg.outcome_noise > 0.0) {
      Rng rng = Rng::substream(cfg.seed, stream_id, std::uint64_t(i),
                               kSimSalt + 1);
      yi += cfg.outcome_noise * rng.next_normal();
    }
    rec.y[size_t(i)] = yi;
  }
  return rec;
}

double ExperimentRecord::mean_outcome() const {
  return std::accumulate(y.begin(), y.end(), 0.0) / double(n);
}

void ExperimentRecord::write_csv(std::ostream& out) const {
  const Eigen::Index d = zeta.cols();
  out << "agent_idx";
  for (Eigen::Index j = 0; j < d; ++j) out << ",zeta_" << (j + 1);
  out << ",xi";
  for (Eigen::Index j = 0; j < d; ++j) out << ",x_" << (j + 1);
  out << ",score,w,y,i_ind\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out << buf;
  };
  for (int i = 0; i < n; ++i) {
    out << i;
    for (Eigen::Index j = 0; j < d; ++j) out << ',' << int(zeta(i, j));
    out << ',' << xi[size_t(i)];
    for (Eigen::Index j = 0; j < d; ++j) {
      out << ',';
      put(x(i, j));
    }
    out << ',';
    put(score[size_t(i)]);
    out << ',' << int(w[size_t(i)]) << ',';
    put(y[size_t(i)]);
    out << ',' << int(i_ind[size_t(i)]) << '\n';
  }
}

std::string ExperimentRecord::sidecar_json() const {
  nlohmann::json j;
  j["n"] = n;
  j["s_prev"] = s_prev;
  j["r_realized"] = r_realized;
  j["b_beta"] = b_beta;
  j["b_s"] = b_s;
  j["q"] = q;
  j["treated_fraction"] =
      double(std::accumulate(w.begin(), w.end(), 0)) / double(n);
  return j.dump(2);
}

}  // namespace stratsel
