#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dfi/core.hpp"
#include "dfi/importance.hpp"

namespace dfi {

// Benchmark data-generating processes:
//   m1: linear signal on the first coordinate, one correlated pair.
//   m2: cosine signal on the first two coordinates, same covariates as m1.
//   m3: two interaction terms gated by the sign of the third coordinate.
//   m4: linear signal plus a feature that is a deterministic square of it.
enum class Model { m1, m2, m3, m4 };

struct ModelSpec {
  Model model = Model::m1;
  double rho = 0.0;
  std::size_t n = 0;
  std::uint64_t seed = 0;

  // rho must lie in [0, 1) for m1..m3 and be 0 for m4; n must be >= 10.
  void validate() const;
};

std::size_t model_dim(Model m);
Matrix model_sigma(Model m, double rho);
std::vector<double> model_mean(Model m);
std::string model_oracle_name(Model m);
std::string to_string(Model m);
Model model_from_string(const std::string& s);

// Draws a dataset with feature names x1..xd. The row-wise draw order is
// fixed (covariate normals, then the noise), so output is reproducible
// across platforms for a given seed.
Dataset generate(const ModelSpec& spec);

// Closed-form targets where they exist. m1 has both per-feature vectors and
// the total; m2 has the total only; m3 has per-feature vectors only (latent
// and attributed coincide there); m4 has none and throws.
struct TheoreticalValues {
  std::optional<std::vector<double>> phi_latent;
  std::optional<std::vector<double>> phi_attributed;
  std::optional<double> total_signal_variance;
};
TheoreticalValues theoretical_values(Model m, double rho);

struct StudyResult {
  ModelSpec spec;
  RunConfig config;
  int reps = 0;
  bool coverage_study = false;
  std::vector<std::string> features;
  // estimates[r][l]: attributed estimate for feature l in replicate r,
  // influence values cleared.
  std::vector<std::vector<ImportanceEstimate>> estimates;
  std::vector<double> totals;  // attributed total per replicate
  std::vector<double> mean_estimate;
  std::vector<double> sd_estimate;
  std::optional<std::vector<double>> truth;
  std::optional<double> total_truth;
  std::optional<std::vector<double>> coverage;  // per-feature CI coverage rate
  std::optional<double> null_coverage_average;  // mean over features with truth 0
};

// Generates reps datasets (data seed spec.seed + r, analysis seed
// config.seed + r) and analyzes each. An oracle regressor is wired to the
// model's regression function and the exact covariance/mean.
StudyResult replication_study(const ModelSpec& spec, const RunConfig& config, int reps);

// Replication study that also records CI coverage of the theoretical
// values; requires a model with per-feature targets (m1, m3).
StudyResult coverage_study(const ModelSpec& spec, const RunConfig& config, int reps);

// replicate,feature,estimate,se,ci_lo,ci_hi,covered rows; covered is 1/0
// against the theoretical value, or NA when no target exists.
void write_replicates_csv(const StudyResult& study, const std::string& path);
void write_summary_json(const StudyResult& study, const std::string& path);

}  // namespace dfi
