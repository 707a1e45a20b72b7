#pragma once

#include <map>
#include <string>
#include <vector>

#include "stratsel/population.hpp"

// Semi-synthetic dataset construction: treat observed covariates as best
// responses to a reference policy, invert the first-order condition to
// recover raw covariates, cluster into K representative types, and emit a
// TypeDistribution.

namespace stratsel {

struct StudentRow {
  Vec x_star;                             // observed covariates, grades negated
  double ses = 0.0;                       // socioeconomic composite
  std::map<std::string, double> outcomes; // named outcome columns
};

// Column layout of the input CSV. The grade block is negated on load (the
// source encodes 1 as the best grade) and costed inversely to SES; the test
// block gets a constant cost.
struct StudentSchema {
  std::vector<std::string> covariate_columns;
  std::vector<int> test_block;    // indices into covariate_columns
  std::vector<int> grade_block;
  std::string ses_column;
  std::vector<std::string> outcome_columns;

  Eigen::Index dim() const { return Eigen::Index(covariate_columns.size()); }
  void validate() const;

  static StudentSchema nels();
};

struct IngestConfig {
  Vec beta_bar;            // reference criterion the observed responses answer
  double s_bar = 19.5;     // reference threshold
  double sigma = 1.20;
  double g_test = 0.1;     // constant cost weight on the test block
  double c_g = 1.0;        // grade cost = c_g / ses_percentile
  int k_clusters = 8;
  int kmeans_iters = 300;
  int kmeans_restarts = 10;
  std::uint64_t seed = 0;
  // Outcome used as y1 (y0 = 0): either a named outcome column, or
  // "derived:mean_tests" (mean raw test-block covariate) or
  // "derived:inverse_ses" (1 / ses percentile).
  std::string outcome;

  void validate(const StudentSchema& schema) const;
};

std::vector<StudentRow> load_student_csv(
    const std::string& path, const StudentSchema& schema,
    const std::map<std::string, double>& imputation);

// Rank-based percentiles of the SES composite, ties averaged, in (0, 1).
std::vector<double> ses_percentiles(const std::vector<StudentRow>& rows);

// Cost weights for one row given its SES percentile.
Vec cost_weights(const StudentSchema& schema, const IngestConfig& cfg,
                 double ses_percentile);

// Z_j = x*_j - (1/(2 g_j)) phi_sigma(s_bar - beta_bar' x*) beta_bar_j.
Vec invert_raw_covariates(const StudentRow& row, const Vec& g,
                          const IngestConfig& cfg);

struct KMeansResult {
  Mat centroids;                        // K x features
  std::vector<int> assignment;
  double inertia = 0.0;
  std::vector<double> inertia_history;  // best restart, per Lloyd iteration
};

// Lloyd's algorithm on standardized features with restarts; empty clusters
// are reseeded from the farthest point.
KMeansResult lloyd_kmeans(const Mat& features, int k, int max_iters,
                          int restarts, std::uint64_t seed);

// Cluster (z, g, y1) feature vectors into k_clusters representative types;
// probabilities are cluster fractions.
TypeDistribution kmeans_types(const std::vector<Vec>& z_vectors,
                              const std::vector<Vec>& g_vectors,
                              const std::vector<double>& y1,
                              const IngestConfig& cfg);

// Full pipeline: percentiles, costs, inversion, outcome resolution,
// clustering.
TypeDistribution ingest_pipeline(const std::vector<StudentRow>& rows,
                                 const StudentSchema& schema,
                                 const IngestConfig& cfg);

}  // namespace stratsel
