#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dfi/core.hpp"
#include "dfi/regression.hpp"
#include "dfi/transport.hpp"

namespace dfi {

// How the replacement values for a latent coordinate are chosen: m uniform
// draws (with replacement) from the evaluation column, or the entire column.
enum class ResampleMode { draws, full_support };

// Per-row kernel form. loco_type uses 2*(y - eta)*delta + delta^2 with
// delta = eta - etabar (the refit-free loss gap); cpi_type averages the
// per-draw loss differences (y - eta(z~))^2 - (y - eta(z))^2 over draws.
enum class LatentEstimator { loco_type, cpi_type };

struct LatentImportanceResult {
  std::size_t j = 0;
  double phi_hat = 0.0;
  // kernel - phi_hat per evaluation row; sums to ~0 by construction.
  std::vector<double> influence_values;
  int m_used = 0;
};

struct AttributedImportanceResult {
  std::size_t l = 0;
  double phi_hat = 0.0;
  std::vector<double> influence_values;
};

struct InferenceSettings {
  double alpha = 0.1;
  bool inflate_near_null = true;
};

// Importance of latent coordinate j for the fitted regression eta, measured
// on held-out rows. phi_hat is the mean of the per-row kernel, so the
// returned influence values are centered by construction.
LatentImportanceResult latent_importance(const FittedRegressor& eta, const Matrix& z_eval,
                                         const std::vector<double>& y_eval, std::size_t j,
                                         int m, std::uint64_t seed,
                                         ResampleMode mode = ResampleMode::draws,
                                         LatentEstimator kind = LatentEstimator::loco_type);

// Pushes latent importances through squared transport weights:
// attributed[l] = sum_j w(j, l) * latent[j], with influence values combined
// the same way and recentered. latents must be ordered by coordinate and
// share a common evaluation set.
std::vector<AttributedImportanceResult> attribute(
    const std::vector<LatentImportanceResult>& latents, const AttributionWeights& w);

// Wald inference from centered influence values: se = sqrt(var(h)/n),
// ci = estimate -+ z_{1-alpha/2} * se. The test statistic divides by an
// inflated standard error (variance + n^{-1/2}/z_{1-alpha}) when
// inflate_near_null is set, which keeps z finite under a true null;
// p is the one-sided upper tail.
ImportanceEstimate infer(const std::string& name, double estimate,
                         std::vector<double> influence, const InferenceSettings& s);

// Importance of a feature group: estimates add, influence values add per row,
// then inference runs on the summed influence.
ImportanceEstimate group_importance(const std::string& name,
                                    const std::vector<ImportanceEstimate>& attributed,
                                    const std::vector<std::size_t>& members,
                                    const InferenceSettings& s);

// Optional exact inputs and estimator variants for run_dfi. sigma/center
// replace the per-fold covariance/mean estimates (simulation oracles);
// oracle supplies the regression function when the configured regressor kind
// is oracle and no registry name is set.
struct RunOverrides {
  std::optional<Matrix> sigma;
  std::optional<std::vector<double>> center;
  LatentEstimator estimator = LatentEstimator::loco_type;
  ResampleMode resample_mode = ResampleMode::draws;
  OracleFn oracle;
};

// Full cross-fit pipeline: fold split, per-fold transport + regression on the
// nuisance part, latent importance on the held-out part, attribution, pooling
// across fold swaps, and Wald inference for every estimate. The weighted
// latent total sum_j sigma_diag[j] * latent[j] equals the attributed total
// exactly (checked internally).
ImportanceReport run_dfi(const Dataset& ds, const RunConfig& config);
ImportanceReport run_dfi(const Dataset& ds, const RunConfig& config,
                         const RunOverrides& overrides);

}  // namespace dfi
