#include "stratsel/estimators.hpp"

#include <cmath>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

namespace stratsel {

Vec ols_rademacher(const Mat& design, const std::vector<double>& response,
                   double b) {
  const Eigen::Index n = design.rows();
  const Eigen::Index k = design.cols();
  if (Eigen::Index(response.size()) != n)
    throw InvalidInputError("ols: design/response length mismatch");
  if (n < k) throw RankError("ols: fewer rows than regressors");
  if (!(b > 0.0)) throw InvalidInputError("ols: b must be positive");

  const Mat gram = (design.transpose() * design) / double(n);
  Eigen::FullPivLU<Mat> lu(gram);
  if (!lu.isInvertible())
    throw RankError("ols: singular Gram matrix");
  const Eigen::Map<const Vec> y(response.data(), n);
  const Vec rhs = (design.transpose() * y) / double(n);
  return lu.solve(rhs) / b;
}

double kde_box(const std::vector<double>& scores, double at, double h) {
  if (scores.empty()) throw InvalidInputError("kde: empty score vector");
  if (!(h > 0.0)) throw InvalidInputError("kde: bandwidth must be positive");
  std::size_t count = 0;
  for (double s : scores) {
    const double z = (at - s) / h;
    if (z >= -0.5 && z < 0.5) ++count;
  }
  return (double(count) / double(scores.size())) / h;
}

double default_bandwidth(const std::vector<double>& scores) {
  const double n = double(scores.size());
  double mean = 0.0;
  for (double s : scores) mean += s;
  mean /= n;
  double ss = 0.0;
  for (double s : scores) ss += (s - mean) * (s - mean);
  const double sd = std::sqrt(ss / std::max(1.0, n - 1.0));
  return 1.06 * sd * std::pow(n, -1.0 / 3.0);
}

Vec model_gradient(const ExperimentRecord& record, double b_beta) {
  return ols_rademacher(record.zeta, record.y, b_beta);
}

namespace {

Mat xi_design(const ExperimentRecord& record) {
  Mat m(record.n, 1);
  for (int i = 0; i < record.n; ++i) m(i, 0) = double(record.xi[size_t(i)]);
  return m;
}

std::vector<double> to_double(const std::vector<std::uint8_t>& v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) out[i] = double(v[i]);
  return out;
}

struct EqPieces {
  double gamma_y_s;
  Vec gamma_pi_beta;
  double gamma_pi_s;
  double density;
  double bandwidth;
  Vec eq_grad;
  bool degenerate;
};

EqPieces equilibrium_pieces(const ExperimentRecord& record, double b_beta,
                            double b_s, double h) {
  EqPieces out;
  const Mat xi = xi_design(record);
  const auto ind = to_double(record.i_ind);
  out.gamma_y_s = ols_rademacher(xi, record.y, b_s)[0];
  out.gamma_pi_beta = ols_rademacher(record.zeta, ind, b_beta);
  out.gamma_pi_s = ols_rademacher(xi, ind, b_s)[0];
  out.bandwidth = h > 0.0 ? h : default_bandwidth(record.score);
  out.density = kde_box(record.score, record.r_realized, out.bandwidth);

  const double denom = out.density - out.gamma_pi_s;
  if (std::abs(denom) < 1e-8)
    throw IllConditionedError(
        "equilibrium gradient: |p_hat - Gamma_{Pi,s}| < 1e-8 (p_hat=" +
        std::to_string(out.density) +
        ", Gamma_{Pi,s}=" + std::to_string(out.gamma_pi_s) + ")");
  out.degenerate = std::abs(denom) < std::max(1e-8, 0.01 * out.density);
  out.eq_grad = out.gamma_y_s * (out.gamma_pi_beta / denom);
  return out;
}

}  // namespace

Vec equilibrium_gradient(const ExperimentRecord& record, double b_beta,
                         double b_s, double h) {
  return equilibrium_pieces(record, b_beta, b_s, h).eq_grad;
}

GradientReport policy_gradient(const ExperimentRecord& record, double b_beta,
                               double b_s, double h) {
  GradientReport rep;
  rep.model_grad = model_gradient(record, b_beta);
  rep.gamma_y_beta = rep.model_grad;
  const EqPieces pieces = equilibrium_pieces(record, b_beta, b_s, h);
  rep.eq_grad = pieces.eq_grad;
  rep.gamma_y_s = pieces.gamma_y_s;
  rep.gamma_pi_beta = pieces.gamma_pi_beta;
  rep.gamma_pi_s = pieces.gamma_pi_s;
  rep.density_hat = pieces.density;
  rep.bandwidth = pieces.bandwidth;
  rep.degenerate_denominator = pieces.degenerate;
  rep.policy_grad = rep.model_grad + rep.eq_grad;
  return rep;
}

std::string GradientReport::to_json_string(int indent) const {
  nlohmann::json j;
  auto vec = [](const Vec& v) {
    std::vector<double> out(size_t(v.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) out[size_t(i)] = v[i];
    return out;
  };
  j["model_grad"] = vec(model_grad);
  j["eq_grad"] = vec(eq_grad);
  j["policy_grad"] = vec(policy_grad);
  j["gamma_y_beta"] = vec(gamma_y_beta);
  j["gamma_y_s"] = gamma_y_s;
  j["gamma_pi_beta"] = vec(gamma_pi_beta);
  j["gamma_pi_s"] = gamma_pi_s;
  j["density_hat"] = density_hat;
  j["bandwidth"] = bandwidth;
  j["degenerate_denominator"] = degenerate_denominator;
  return j.dump(indent);
}

}  // namespace stratsel
