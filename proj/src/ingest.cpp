#include "stratsel/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

#include "stratsel/gauss.hpp"
#include "stratsel/rng.hpp"

namespace stratsel {

StudentSchema StudentSchema::nels() {
  StudentSchema s;
  s.covariate_columns = {"F22XRSTD", "F22XMSTD", "F22XSSTD", "F22XHSTD",
                         "F2RHENG2", "F2RHMAG2", "F2RHSCG2", "F2RHSOG2",
                         "F2RHFOG2"};
  s.test_block = {0, 1, 2, 3};
  s.grade_block = {4, 5, 6, 7, 8};
  s.ses_column = "F2SES1";
  s.outcome_columns = {"F3ATTEND"};
  return s;
}

void StudentSchema::validate() const {
  if (covariate_columns.empty())
    throw InvalidInputError("schema: no covariate columns");
  std::vector<bool> seen(covariate_columns.size(), false);
  for (const auto& block : {test_block, grade_block})
    for (int idx : block) {
      if (idx < 0 || idx >= int(covariate_columns.size()))
        throw InvalidInputError("schema: block index out of range");
      if (seen[size_t(idx)])
        throw InvalidInputError("schema: blocks must not overlap");
      seen[size_t(idx)] = true;
    }
  if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; }))
    throw InvalidInputError("schema: blocks must partition the covariates");
  if (ses_column.empty()) throw InvalidInputError("schema: missing ses column");
}

void IngestConfig::validate(const StudentSchema& schema) const {
  schema.validate();
  if (beta_bar.size() != schema.dim())
    throw InvalidInputError("ingest: beta_bar dimension mismatch");
  if (std::abs(beta_bar.norm() - 1.0) > 1e-9)
    throw InvalidInputError("ingest: beta_bar must be unit norm");
  if (!(sigma > 0.0)) throw InvalidInputError("ingest: sigma must be positive");
  if (!(g_test > 0.0 && c_g > 0.0))
    throw InvalidInputError("ingest: cost parameters must be positive");
  if (k_clusters < 1) throw InvalidInputError("ingest: k_clusters must be >= 1");
  if (outcome.empty()) throw InvalidInputError("ingest: no outcome selected");
  if (outcome.rfind("derived:", 0) == 0) {
    if (outcome != "derived:mean_tests" && outcome != "derived:inverse_ses")
      throw InvalidInputError("ingest: unknown derived outcome " + outcome);
  } else if (std::find(schema.outcome_columns.begin(),
                       schema.outcome_columns.end(),
                       outcome) == schema.outcome_columns.end()) {
    throw InvalidInputError("ingest: outcome column not in schema: " + outcome);
  }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) {
    while (!field.empty() && (field.back() == '\r' || field.back() == ' '))
      field.pop_back();
    size_t start = field.find_first_not_of(' ');
    fields.push_back(start == std::string::npos ? "" : field.substr(start));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "." || s == "NaN";
}

}  // namespace

std::vector<StudentRow> load_student_csv(
    const std::string& path, const StudentSchema& schema,
    const std::map<std::string, double>& imputation) {
  schema.validate();
  std::ifstream in(path);
  if (!in) throw InvalidInputError("cannot open student CSV: " + path);

  std::string line;
  if (!std::getline(in, line))
    throw InvalidInputError("student CSV is empty: " + path);
  const auto header = split_csv_line(line);

  // Strict header: every column must be known, every schema column present.
  std::map<std::string, int> col_of;
  for (size_t c = 0; c < header.size(); ++c) {
    const std::string& name = header[c];
    const bool known =
        std::find(schema.covariate_columns.begin(),
                  schema.covariate_columns.end(),
                  name) != schema.covariate_columns.end() ||
        name == schema.ses_column ||
        std::find(schema.outcome_columns.begin(), schema.outcome_columns.end(),
                  name) != schema.outcome_columns.end();
    if (!known)
      throw InvalidInputError("student CSV: unknown column '" + name + "'");
    col_of[name] = int(c);
  }
  auto require = [&](const std::string& name) {
    auto it = col_of.find(name);
    if (it == col_of.end())
      throw InvalidInputError("student CSV: missing column '" + name + "'");
    return it->second;
  };
  std::vector<int> cov_cols;
  for (const auto& name : schema.covariate_columns)
    cov_cols.push_back(require(name));
  const int ses_col = require(schema.ses_column);
  std::vector<int> out_cols;
  for (const auto& name : schema.outcome_columns)
    out_cols.push_back(require(name));

  std::vector<bool> negate(schema.covariate_columns.size(), false);
  for (int idx : schema.grade_block) negate[size_t(idx)] = true;

  std::vector<StudentRow> rows;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    if (fields.size() != header.size())
      throw InvalidInputError("student CSV line " + std::to_string(line_no) +
                              ": expected " + std::to_string(header.size()) +
                              " fields, got " + std::to_string(fields.size()));
    auto value = [&](const std::string& name, int col) {
      const std::string& raw = fields[size_t(col)];
      if (is_missing(raw)) {
        auto imp = imputation.find(name);
        if (imp == imputation.end())
          throw InvalidInputError("student CSV line " + std::to_string(line_no) +
                                  ": missing '" + name +
                                  "' with no imputation value");
        return imp->second;
      }
      try {
        size_t used = 0;
        const double v = std::stod(raw, &used);
        if (used != raw.size()) throw std::invalid_argument(raw);
        return v;
      } catch (const std::exception&) {
        throw InvalidInputError("student CSV line " + std::to_string(line_no) +
                                ": cannot parse '" + raw + "' in column " +
                                name);
      }
    };

    StudentRow row;
    row.x_star.resize(schema.dim());
    for (size_t k = 0; k < cov_cols.size(); ++k) {
      double v = value(schema.covariate_columns[k], cov_cols[k]);
      if (negate[k]) v = -v;
      row.x_star[Eigen::Index(k)] = v;
    }
    row.ses = value(schema.ses_column, ses_col);
    for (size_t k = 0; k < out_cols.size(); ++k)
      row.outcomes[schema.outcome_columns[k]] =
          value(schema.outcome_columns[k], out_cols[k]);
    if (!row.x_star.allFinite() || !std::isfinite(row.ses))
      throw InvalidInputError("student CSV line " + std::to_string(line_no) +
                              ": non-finite value after imputation");
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> ses_percentiles(const std::vector<StudentRow>& rows) {
  const size_t m = rows.size();
  if (m == 0) throw InvalidInputError("ses_percentiles: no rows");
  std::vector<size_t> order(m);
  std::iota(order.begin(), order.end(), 0u);
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    return rows[a].ses < rows[b].ses;
  });
  std::vector<double> pct(m);
  size_t i = 0;
  while (i < m) {
    size_t j = i;
    while (j + 1 < m && rows[order[j + 1]].ses == rows[order[i]].ses) ++j;
    const double avg_rank = 0.5 * (double(i) + double(j)) + 1.0;  // 1-based
    for (size_t k = i; k <= j; ++k)
      pct[order[k]] = (avg_rank - 0.5) / double(m);
    i = j + 1;
  }
  return pct;
}

Vec cost_weights(const StudentSchema& schema, const IngestConfig& cfg,
                 double ses_percentile) {
  if (!(ses_percentile > 0.0 && ses_percentile < 1.0))
    throw InvalidInputError("cost_weights: percentile must be in (0, 1)");
  Vec g(schema.dim());
  for (int idx : schema.test_block) g[idx] = cfg.g_test;
  for (int idx : schema.grade_block) g[idx] = cfg.c_g / ses_percentile;
  return g;
}

Vec invert_raw_covariates(const StudentRow& row, const Vec& g,
                          const IngestConfig& cfg) {
  if (g.size() != row.x_star.size() || g.size() != cfg.beta_bar.size())
    throw InvalidInputError("invert_raw_covariates: dimension mismatch");
  if ((g.array() <= 0.0).any())
    throw InvalidInputError("invert_raw_covariates: nonpositive cost weight");
  const double phi =
      normal_pdf(cfg.s_bar - cfg.beta_bar.dot(row.x_star), cfg.sigma);
  return row.x_star -
         (0.5 * phi) * (cfg.beta_bar.array() / g.array()).matrix();
}

namespace {

double run_lloyd(const Mat& feats, int k, int max_iters, Rng& rng,
                 Mat& centroids, std::vector<int>& assign,
                 std::vector<double>& history) {
  const Eigen::Index m = feats.rows();
  const Eigen::Index f = feats.cols();

  // Initialize from k distinct rows.
  std::vector<Eigen::Index> pool(static_cast<size_t>(m), Eigen::Index(0));
  std::iota(pool.begin(), pool.end(), Eigen::Index(0));
  for (int c = 0; c < k; ++c) {
    const size_t pick =
        size_t(c) + size_t(rng.next_double() * double(m - c)) % size_t(m - c);
    std::swap(pool[size_t(c)], pool[pick]);
    centroids.row(c) = feats.row(pool[size_t(c)]);
  }

  assign.assign(size_t(m), -1);
  history.clear();
  double inertia = std::numeric_limits<double>::infinity();

  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    inertia = 0.0;
    for (Eigen::Index i = 0; i < m; ++i) {
      int best = 0;
      double best_d = std::numeric_limits<double>::infinity();
      for (int c = 0; c < k; ++c) {
        const double dist =
            (feats.row(i) - centroids.row(c)).squaredNorm();
        if (dist < best_d) {
          best_d = dist;
          best = c;
        }
      }
      if (assign[size_t(i)] != best) {
        assign[size_t(i)] = best;
        changed = true;
      }
      inertia += best_d;
    }
    history.push_back(inertia);

    // Update step with empty-cluster reseeding from the farthest point.
    Mat sums = Mat::Zero(k, f);
    std::vector<int> counts(size_t(k), 0);
    for (Eigen::Index i = 0; i < m; ++i) {
      sums.row(assign[size_t(i)]) += feats.row(i);
      ++counts[size_t(assign[size_t(i)])];
    }
    for (int c = 0; c < k; ++c) {
      if (counts[size_t(c)] > 0) {
        centroids.row(c) = sums.row(c) / double(counts[size_t(c)]);
      } else {
        Eigen::Index far = 0;
        double far_d = -1.0;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double dist =
              (feats.row(i) -
               centroids.row(assign[size_t(i)])).squaredNorm();
          if (dist > far_d) {
            far_d = dist;
            far = i;
          }
        }
        centroids.row(c) = feats.row(far);
      }
    }
    if (!changed && iter > 0) break;
  }
  return inertia;
}

}  // namespace

KMeansResult lloyd_kmeans(const Mat& features, int k, int max_iters,
                          int restarts, std::uint64_t seed) {
  if (k < 1) throw InvalidInputError("kmeans: k must be >= 1");
  if (features.rows() < k)
    throw InvalidInputError("kmeans: fewer rows than clusters");
  if (restarts < 1) throw InvalidInputError("kmeans: restarts must be >= 1");

  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < restarts; ++r) {
    Rng rng = Rng::substream(seed, std::uint64_t(r), 0, 0x4Bu);
    Mat centroids(k, features.cols());
    std::vector<int> assign;
    std::vector<double> history;
    const double inertia =
        run_lloyd(features, k, max_iters, rng, centroids, assign, history);
    if (inertia < best.inertia) {
      best.inertia = inertia;
      best.centroids = std::move(centroids);
      best.assignment = std::move(assign);
      best.inertia_history = std::move(history);
    }
  }
  return best;
}

TypeDistribution kmeans_types(const std::vector<Vec>& z_vectors,
                              const std::vector<Vec>& g_vectors,
                              const std::vector<double>& y1,
                              const IngestConfig& cfg) {
  const size_t m = z_vectors.size();
  if (m == 0 || g_vectors.size() != m || y1.size() != m)
    throw InvalidInputError("kmeans_types: inconsistent inputs");
  if (int(m) < cfg.k_clusters)
    throw InvalidInputError("kmeans_types: fewer rows than clusters");
  const Eigen::Index d = z_vectors.front().size();

  // Features: (z, g, y1), standardized per column.
  const Eigen::Index f = 2 * d + 1;
  Mat feats(Eigen::Index(m), f);
  for (size_t i = 0; i < m; ++i) {
    feats.block(Eigen::Index(i), 0, 1, d) = z_vectors[i].transpose();
    feats.block(Eigen::Index(i), d, 1, d) = g_vectors[i].transpose();
    feats(Eigen::Index(i), 2 * d) = y1[i];
  }
  Vec mean = feats.colwise().mean();
  Vec sd(f);
  for (Eigen::Index c = 0; c < f; ++c) {
    const double var =
        (feats.col(c).array() - mean[c]).square().sum() / double(m);
    sd[c] = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  Mat standardized = (feats.rowwise() - mean.transpose()).array().rowwise() /
                     sd.transpose().array();

  const KMeansResult km =
      lloyd_kmeans(standardized, cfg.k_clusters, cfg.kmeans_iters,
                   cfg.kmeans_restarts, cfg.seed);

  std::vector<int> counts(size_t(cfg.k_clusters), 0);
  for (int a : km.assignment) ++counts[size_t(a)];

  TypeDistribution dist;
  dist.noise.sigma = cfg.sigma;
  double max_abs_z = 0.0;
  for (int c = 0; c < cfg.k_clusters; ++c) {
    Vec center = (km.centroids.row(c).transpose().array() * sd.array()).matrix() + mean;
    AgentType t;
    t.z = center.head(d);
    t.cost.g = center.segment(d, d).cwiseMax(1e-6);
    t.y0 = 0.0;
    t.y1 = center[2 * d];
    max_abs_z = std::max(max_abs_z, t.z.cwiseAbs().maxCoeff());
    dist.types.push_back(std::move(t));
    dist.tags.push_back({"cluster_" + std::to_string(c)});
  }
  dist.box = CovariateBox::centered(d, std::max(100.0, max_abs_z + 50.0));

  // Cluster fractions; the last entry absorbs rounding so the sum is exact.
  dist.probs.resize(cfg.k_clusters);
  double acc = 0.0;
  for (int c = 0; c + 1 < cfg.k_clusters; ++c) {
    dist.probs[c] = double(counts[size_t(c)]) / double(m);
    acc += dist.probs[c];
  }
  dist.probs[cfg.k_clusters - 1] = 1.0 - acc;
  dist.validate();
  return dist;
}

TypeDistribution ingest_pipeline(const std::vector<StudentRow>& rows,
                                 const StudentSchema& schema,
                                 const IngestConfig& cfg) {
  cfg.validate(schema);
  if (rows.empty()) throw InvalidInputError("ingest: no rows");
  const auto pct = ses_percentiles(rows);

  std::vector<Vec> z, g;
  std::vector<double> y1;
  z.reserve(rows.size());
  g.reserve(rows.size());
  y1.reserve(rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    Vec gi = cost_weights(schema, cfg, pct[i]);
    Vec zi = invert_raw_covariates(rows[i], gi, cfg);
    double out;
    if (cfg.outcome == "derived:mean_tests") {
      double acc = 0.0;
      for (int idx : schema.test_block) acc += zi[idx];
      out = acc / double(schema.test_block.size());
    } else if (cfg.outcome == "derived:inverse_ses") {
      out = 1.0 / pct[i];
    } else {
      out = rows[i].outcomes.at(cfg.outcome);
    }
    z.push_back(std::move(zi));
    g.push_back(std::move(gi));
    y1.push_back(out);
  }
  return kmeans_types(z, g, y1, cfg);
}

}  // namespace stratsel
