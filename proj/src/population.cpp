#include "stratsel/population.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <nlohmann/json.hpp>

#include "stratsel/gauss.hpp"

namespace stratsel {

using json = nlohmann::json;

double TypeDistribution::alpha_star() const {
  double a = std::numeric_limits<double>::infinity();
  for (const auto& t : types) a = std::min(a, t.cost.alpha());
  return a;
}

void TypeDistribution::validate() const {
  if (types.empty()) throw InvalidInputError("distribution: no types");
  if (probs.size() != Eigen::Index(types.size()))
    throw InvalidInputError("distribution: probs/types size mismatch");
  if ((probs.array() < 0.0).any())
    throw InvalidInputError("distribution: probabilities must be nonnegative");
  if (std::abs(probs.sum() - 1.0) > 1e-12)
    throw InvalidInputError("distribution: probabilities must sum to 1");
  noise.validate();
  box.validate();
  const Eigen::Index d = dim();
  for (const auto& t : types) {
    if (t.z.size() != d)
      throw InvalidInputError("distribution: inconsistent covariate dimension");
    t.validate(box);
  }
  if (!(alpha_star() > 0.0))
    throw InvalidInputError("distribution: alpha_star must be positive");
  if (!tags.empty() && tags.size() != types.size())
    throw InvalidInputError("distribution: tags/types size mismatch");
}

std::vector<bool> TypeDistribution::tag_mask(const std::string& tag) const {
  std::vector<bool> mask(types.size(), false);
  for (size_t k = 0; k < tags.size(); ++k)
    mask[k] = std::find(tags[k].begin(), tags[k].end(), tag) != tags[k].end();
  return mask;
}

namespace {

json vec_to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

Vec vec_from_json(const json& a, const char* what) {
  if (!a.is_array()) throw InvalidInputError(std::string(what) + ": expected array");
  Vec v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[Eigen::Index(i)] = a[i].get<double>();
  return v;
}

}  // namespace

std::string TypeDistribution::to_json_string(int indent) const {
  json j;
  j["types"] = json::array();
  for (size_t k = 0; k < types.size(); ++k) {
    json t;
    t["z"] = vec_to_json(types[k].z);
    t["g"] = vec_to_json(types[k].cost.g);
    t["y0"] = types[k].y0;
    t["y1"] = types[k].y1;
    t["tags"] = k < tags.size() ? json(tags[k]) : json::array();
    j["types"].push_back(std::move(t));
  }
  j["probs"] = vec_to_json(probs);
  j["sigma"] = noise.sigma;
  j["box"] = {{"lo", vec_to_json(box.lo)}, {"hi", vec_to_json(box.hi)}};
  return j.dump(indent);
}

TypeDistribution TypeDistribution::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("distribution JSON: ") + e.what());
  }
  TypeDistribution dist;
  try {
    for (const auto& t : j.at("types")) {
      AgentType a;
      a.z = vec_from_json(t.at("z"), "type.z");
      a.cost.g = vec_from_json(t.at("g"), "type.g");
      a.y0 = t.at("y0").get<double>();
      a.y1 = t.at("y1").get<double>();
      dist.types.push_back(std::move(a));
      std::vector<std::string> type_tags;
      if (t.contains("tags"))
        for (const auto& s : t["tags"]) type_tags.push_back(s.get<std::string>());
      dist.tags.push_back(std::move(type_tags));
    }
    dist.probs = vec_from_json(j.at("probs"), "probs");
    dist.noise.sigma = j.at("sigma").get<double>();
    if (j.contains("box")) {
      dist.box.lo = vec_from_json(j["box"].at("lo"), "box.lo");
      dist.box.hi = vec_from_json(j["box"].at("hi"), "box.hi");
    } else {
      dist.box = CovariateBox::centered(dist.dim());
    }
  } catch (const json::exception& e) {
    throw InvalidInputError(std::string("distribution JSON: ") + e.what());
  }
  dist.validate();
  return dist;
}

TypeDistribution TypeDistribution::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open distribution file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json_string(buf.str());
}

void TypeDistribution::save_json(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw InvalidInputError("cannot write distribution file: " + path);
  out << to_json_string() << "\n";
}

std::vector<double> expected_scores(const TypeDistribution& dist,
                                    const Vec& beta, double s) {
  dist.validate();
  if (beta.size() != dist.dim())
    throw InvalidInputError("expected_scores: beta dimension mismatch");
  const double var = dist.noise.sigma * dist.noise.sigma;
  if (!(var * dist.alpha_star() * sqrt_two_pi_e() > 1.0))
    throw RegimeError(
        "population: some type violates the uniqueness regime "
        "sigma^2 > 1/(alpha sqrt(2 pi e))");
  std::vector<double> omega(dist.types.size());
  for (size_t k = 0; k < dist.types.size(); ++k) {
    const auto p = detail::make_score_problem(dist.types[k].z,
                                              dist.types[k].cost.g, beta,
                                              dist.noise.sigma);
    omega[k] = detail::solve_score(p, s).m;
  }
  return omega;
}

namespace {

double mixture_cdf(const TypeDistribution& dist,
                   const std::vector<double>& omega, double r) {
  double acc = 0.0;
  for (size_t k = 0; k < omega.size(); ++k)
    acc += dist.probs[Eigen::Index(k)] *
           normal_cdf(r - omega[k], dist.noise.sigma);
  return acc;
}

double mixture_quantile(const TypeDistribution& dist,
                        const std::vector<double>& omega, double q) {
  const double sigma = dist.noise.sigma;
  double lo = *std::min_element(omega.begin(), omega.end()) - 10.0 * sigma;
  double hi = *std::max_element(omega.begin(), omega.end()) + 10.0 * sigma;
  int guard = 0;
  while (mixture_cdf(dist, omega, lo) > q) {
    lo -= 10.0 * sigma;
    if (++guard > 100)
      throw NumericalError("quantile: bracket expansion failed (low side)");
  }
  guard = 0;
  while (mixture_cdf(dist, omega, hi) < q) {
    hi += 10.0 * sigma;
    if (++guard > 100)
      throw NumericalError("quantile: bracket expansion failed (high side)");
  }
  for (int i = 0; i < 200 && hi - lo > 1e-12; ++i) {
    const double mid = 0.5 * (lo + hi);
    (mixture_cdf(dist, omega, mid) < q ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace

double score_cdf(const TypeDistribution& dist, const Vec& beta, double s,
                 double r) {
  return mixture_cdf(dist, expected_scores(dist, beta, s), r);
}

double score_pdf(const TypeDistribution& dist, const Vec& beta, double s,
                 double r) {
  const auto omega = expected_scores(dist, beta, s);
  double acc = 0.0;
  for (size_t k = 0; k < omega.size(); ++k)
    acc += dist.probs[Eigen::Index(k)] *
           normal_pdf(r - omega[k], dist.noise.sigma);
  return acc;
}

double quantile(const TypeDistribution& dist, const Vec& beta, double s,
                const CapacitySpec& q) {
  q.validate();
  return mixture_quantile(dist, expected_scores(dist, beta, s), q.q);
}

double raw_score_quantile(const TypeDistribution& dist, const Vec& beta,
                          const CapacitySpec& q) {
  dist.validate();
  q.validate();
  std::vector<double> omega(dist.types.size());
  for (size_t k = 0; k < dist.types.size(); ++k)
    omega[k] = beta.dot(dist.types[k].z);
  return mixture_quantile(dist, omega, q.q);
}

EquilibriumResult meanfield_fixed_point(const TypeDistribution& dist,
                                        const Vec& beta, const CapacitySpec& q,
                                        double s0, double tol, int max_iter) {
  q.validate();
  if (max_iter < 1) throw InvalidInputError("fixed point: max_iter must be >= 1");
  std::vector<double> trace{s0};
  double s = s0;
  double prev_step = 0.0;
  double kappa = 0.0;
  for (int t = 1; t <= max_iter; ++t) {
    const double next = quantile(dist, beta, s, q);
    const double step = std::abs(next - s);
    trace.push_back(next);
    if (t >= 2 && prev_step > 1e-14) kappa = std::max(kappa, step / prev_step);
    prev_step = step;
    s = next;
    if (step <= tol) {
      EquilibriumResult res;
      res.s_star = s;
      res.iterations = t;
      res.residual = std::abs(s - quantile(dist, beta, s, q));
      res.kappa_hat = kappa;
      return res;
    }
  }
  throw NonConvergenceError("fixed point: max_iter exceeded", std::move(trace));
}

double equilibrium_threshold(const TypeDistribution& dist, const Vec& beta,
                             const CapacitySpec& q, double tol) {
  try {
    return meanfield_fixed_point(dist, beta, q, 0.0, tol, 2000).s_star;
  } catch (const NonConvergenceError&) {
    // Bisection on h(s) = s - quantile(beta, s); h < 0 far left, > 0 far
    // right because the quantile map is bounded.
    auto h = [&](double s) { return s - quantile(dist, beta, s, q); };
    const double scale =
        std::abs(raw_score_quantile(dist, beta, q)) + 10.0 * dist.noise.sigma;
    double lo = -2.0 * scale - 10.0, hi = 2.0 * scale + 10.0;
    int guard = 0;
    while (h(lo) > 0.0) {
      lo -= scale;
      if (++guard > 50) throw NumericalError("equilibrium: no lower bracket");
    }
    guard = 0;
    while (h(hi) < 0.0) {
      hi += scale;
      if (++guard > 50) throw NumericalError("equilibrium: no upper bracket");
    }
    for (int i = 0; i < 200 && hi - lo > tol; ++i) {
      const double mid = 0.5 * (lo + hi);
      (h(mid) < 0.0 ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
}

double policy_value(const TypeDistribution& dist, const Vec& beta, double s,
                    double r) {
  const auto omega = expected_scores(dist, beta, s);
  double acc = 0.0;
  for (size_t k = 0; k < omega.size(); ++k) {
    const auto& t = dist.types[k];
    acc += dist.probs[Eigen::Index(k)] *
           (t.y0 + t.delta() * (1.0 - normal_cdf(r - omega[k],
                                                 dist.noise.sigma)));
  }
  return acc;
}

double equilibrium_policy_value(const TypeDistribution& dist, const Vec& beta,
                                const CapacitySpec& q) {
  const double s_star = equilibrium_threshold(dist, beta, q, 1e-10);
  return policy_value(dist, beta, s_star, s_star);
}

Vec threshold_gradient(const TypeDistribution& dist, const Vec& beta,
                       const CapacitySpec& q) {
  return value_gradients(dist, beta, q).ds_dbeta;
}

double natural_share_above(const TypeDistribution& dist, const Vec& beta,
                           const CapacitySpec& q,
                           const std::vector<bool>& group_mask) {
  if (group_mask.size() != dist.types.size())
    throw InvalidInputError("natural_share_above: mask/types size mismatch");
  const double s_star = equilibrium_threshold(dist, beta, q, 1e-10);
  const auto omega = expected_scores(dist, beta, s_star);
  double above = 0.0, above_masked = 0.0;
  for (size_t k = 0; k < omega.size(); ++k) {
    const double mass = dist.probs[Eigen::Index(k)] *
                        (1.0 - normal_cdf(s_star - omega[k], dist.noise.sigma));
    above += mass;
    if (group_mask[k]) above_masked += mass;
  }
  if (above <= 0.0)
    throw NumericalError("natural_share_above: no mass above threshold");
  return above_masked / above;
}

ValueGradients value_gradients(const TypeDistribution& dist, const Vec& beta,
                               const CapacitySpec& q) {
  const double s_star = equilibrium_threshold(dist, beta, q, 1e-12);
  const auto omega = expected_scores(dist, beta, s_star);
  const double sigma = dist.noise.sigma;
  const Eigen::Index d = dist.dim();

  ValueGradients out;
  out.s_star = s_star;
  out.model = Vec::Zero(d);
  out.ds_dbeta = Vec::Zero(d);

  double density = 0.0;   // p(beta, s*)(s*)
  double dpi_ds = 0.0;    // sum_k p_k phi_k * domega_k/ds
  Vec dpi_dbeta = Vec::Zero(d);

  for (size_t k = 0; k < omega.size(); ++k) {
    const auto& type = dist.types[k];
    const double pk = dist.probs[Eigen::Index(k)];
    const double u = s_star - omega[k];
    const double phi = normal_pdf(u, sigma);
    const double dphi = normal_pdf_deriv(u, sigma);
    const double half_quad =
        0.5 * (beta.array().square() / type.cost.g.array()).sum();
    const double denom = 1.0 + dphi * half_quad;
    const double domega_ds = dphi * half_quad / denom;
    const Vec domega_dbeta =
        (type.z +
         phi * (beta.array() / type.cost.g.array()).matrix()) /
        denom;

    density += pk * phi;
    dpi_ds += pk * phi * domega_ds;
    dpi_dbeta += pk * phi * domega_dbeta;

    out.model += pk * type.delta() * phi * domega_dbeta;
    out.dv_ds += pk * type.delta() * phi * domega_ds;
    out.dv_dr -= pk * type.delta() * phi;
  }

  const double gap = density - dpi_ds;
  if (!(std::abs(gap) > 1e-14))
    throw NumericalError("threshold_gradient: density - dPi/ds is singular");
  out.ds_dbeta = dpi_dbeta / gap;
  out.equilibrium = (out.dv_ds + out.dv_dr) * out.ds_dbeta;
  out.total = out.model + out.equilibrium;
  return out;
}

}  // namespace stratsel
