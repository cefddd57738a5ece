#pragma once

#include <string>
#include <vector>

#include "dfi/core.hpp"
#include "dfi/regression.hpp"

namespace dfi {

enum class BaselineMethod { loco, cpi };

struct BaselineResult {
  BaselineMethod method = BaselineMethod::loco;
  std::vector<ImportanceEstimate> estimates;  // one per raw feature
};

// Raw-space leave-one-covariate-out importance: the loss gap between a
// submodel without feature j and the full model, cross-fit on the same fold
// split as the main pipeline. With a forest or kernel regressor the submodel
// is refit without column j; with an oracle regressor the submodel averages
// the full model over a Gaussian conditional for x_j given the rest
// (linear mean, residual sd, m_resamples fixed draws).
BaselineResult loco_importance(const Dataset& ds, const RunConfig& config,
                               OracleFn oracle = {});

// Raw-space conditional permutation importance: feature j is replaced by
// nu_j(x_-j) plus a donor residual drawn from the held-out fold, and the
// kernel averages the per-draw loss differences. nu_j is linear for the
// oracle regressor and the configured regressor otherwise.
BaselineResult cpi_importance(const Dataset& ds, const RunConfig& config,
                              OracleFn oracle = {});

std::string to_string(BaselineMethod m);

}  // namespace dfi
