#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dfi/linalg.hpp"

namespace dfi {

// Feature matrix with named columns plus the response vector.
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix x;               // n rows, d columns
  std::vector<double> y;  // length n

  std::size_t n() const { return x.rows; }
  std::size_t d() const { return x.cols; }
  // Throws std::invalid_argument on shape/name/finiteness violations.
  void validate() const;
};

struct StandardizationInfo {
  std::vector<double> means;   // d feature means, then the response mean
  std::vector<double> scales;  // matching sample standard deviations
};

enum class TransportKind { bures_wasserstein, triangular };
enum class RegressorKind { random_forest, kernel_smoother, oracle };

struct RegressorConfig {
  RegressorKind kind = RegressorKind::random_forest;
  int n_trees = 500;
  int min_leaf = 5;
  double max_features = 1.0 / 3.0;  // fraction of columns tried per split
  double bandwidth = 1.0;           // kernel smoother only
  std::string oracle_fn;            // oracle only, name of a registered function
  std::uint64_t seed = 0;
};

struct RunConfig {
  int n_folds = 2;
  int m_resamples = 50;
  double alpha = 0.1;
  std::uint64_t seed = 0;
  TransportKind transport_kind = TransportKind::bures_wasserstein;
  RegressorConfig regressor;
  bool inflate_near_null = true;
};

struct ImportanceEstimate {
  std::string name;
  double estimate = 0.0;
  double std_error = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double z_score = 0.0;
  double p_value = 1.0;
  std::vector<double> influence_values;
};

struct ImportanceReport {
  std::vector<ImportanceEstimate> latent;      // per latent coordinate
  std::vector<ImportanceEstimate> attributed;  // per raw feature
  std::vector<std::pair<std::string, ImportanceEstimate>> groups;
  double total_latent = 0.0;
  double total_attributed = 0.0;
  RunConfig config;
  // Per-coordinate total squared transport weight, diag(L L^T); equals the
  // diagonal of the estimated covariance for the whitening map.
  std::vector<double> sigma_diag;
  bool standardized = false;
  // Optional baseline blocks, present when the caller computed them.
  std::vector<ImportanceEstimate> baseline_loco;
  std::vector<ImportanceEstimate> baseline_cpi;
};

// Reads a CSV with one header row; the target column becomes y, the rest x.
// Column order is preserved. Errors identify 1-based data rows and column
// names.
Dataset load_csv(const std::string& path, const std::string& target);

// Centers and scales every column and the response to sample mean 0 and
// sample sd 1 (n-1 denominator). A constant column is an error.
std::pair<Dataset, StandardizationInfo> standardize(const Dataset& ds);

// JSON report IO; write_report(read_report(p)) is byte-stable and
// read_report(write_report(r)) reproduces every numeric field bit-exactly.
void write_report(const ImportanceReport& report, const std::string& path);
ImportanceReport read_report(const std::string& path);

const char* to_string(TransportKind k);
const char* to_string(RegressorKind k);

}  // namespace dfi
