#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "dfi/core.hpp"
#include "dfi/linalg.hpp"

namespace dfi {

struct FoldAssignment {
  std::vector<int> fold_of;  // n entries in [0, k)
  int k = 0;
};

// Permutation-based assignment; fold sizes differ by at most one and the
// result depends only on (n, k, seed).
FoldAssignment split_folds(std::size_t n, int k, std::uint64_t seed);

// Closed-form regression function used as an oracle predictor.
using OracleFn = std::function<double(const double* row, std::size_t d)>;

// Trained predictor; immutable and safe to share across threads.
class FittedRegressor {
 public:
  FittedRegressor() = default;

  std::size_t d_in() const;
  std::size_t training_n() const;
  bool valid() const { return impl_ != nullptr; }

  double predict_one(const double* row, std::size_t width) const;
  std::vector<double> predict(const Matrix& rows) const;

  // Predictions for `row` with coordinate j replaced by each of values[0..m).
  // Bit-identical to replace-and-predict; the forest walks each tree once and
  // partitions the replacement values only at splits on feature j.
  void predict_coordinate_sweep(const double* row, std::size_t width, std::size_t j,
                                const double* values, std::size_t m,
                                double* out) const;

  struct Impl;
  explicit FittedRegressor(std::shared_ptr<const Impl> impl) : impl_(std::move(impl)) {}

 private:
  std::shared_ptr<const Impl> impl_;
};

// Fits the configured regressor to (x, y). Forest trees grow on bootstrap
// resamples with per-tree seeds config.seed + tree_index; the result does not
// depend on the thread count.
FittedRegressor fit(const RegressorConfig& config, const Matrix& x,
                    const std::vector<double>& y);

// Oracle predictors. The plain form evaluates fn on the input row; the
// affine form evaluates fn(l * row + offset), which turns a raw-space
// regression function into a latent-space one.
FittedRegressor make_oracle_regressor(OracleFn fn, std::size_t d_in);
FittedRegressor make_oracle_affine(OracleFn fn, Matrix l, std::vector<double> offset);

// Built-in oracle registry (m1_mu, m2_mu, m3_mu, m4_mu).
OracleFn oracle_by_name(const std::string& name);

}  // namespace dfi
