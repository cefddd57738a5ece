#include "dfi/regression.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "dfi/kernels.hpp"
#include "dfi/rng.hpp"
#include "dfi/stats.hpp"
#include "dfi/threading.hpp"

namespace dfi {

FoldAssignment split_folds(std::size_t n, int k, std::uint64_t seed) {
  if (k < 2) throw std::invalid_argument("split_folds: k must be >= 2");
  if (n < 2 * static_cast<std::size_t>(k))
    throw std::invalid_argument("split_folds: need n >= 2k, got n=" +
                                std::to_string(n) + ", k=" + std::to_string(k));
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  rng.shuffle(perm);
  FoldAssignment fa;
  fa.k = k;
  fa.fold_of.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    fa.fold_of[perm[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
  return fa;
}

struct FittedRegressor::Impl {
  std::size_t d_in = 0;
  std::size_t n_train = 0;
  virtual double predict_one(const double* row) const = 0;
  // Generic sweep: replace coordinate j and predict, one value at a time.
  virtual void sweep(const double* row, std::size_t j, const double* values,
                     std::size_t m, double* out) const {
    std::vector<double> tmp(row, row + d_in);
    for (std::size_t q = 0; q < m; ++q) {
      tmp[j] = values[q];
      out[q] = predict_one(tmp.data());
    }
  }
  virtual ~Impl() = default;
};

std::size_t FittedRegressor::d_in() const { return impl_ ? impl_->d_in : 0; }
std::size_t FittedRegressor::training_n() const { return impl_ ? impl_->n_train : 0; }

double FittedRegressor::predict_one(const double* row, std::size_t width) const {
  if (!impl_) throw std::logic_error("predict on an unfitted regressor");
  if (width != impl_->d_in)
    throw std::invalid_argument("predict: row width " + std::to_string(width) +
                                " does not match model dimension " +
                                std::to_string(impl_->d_in));
  return impl_->predict_one(row);
}

std::vector<double> FittedRegressor::predict(const Matrix& rows) const {
  if (!impl_) throw std::logic_error("predict on an unfitted regressor");
  if (rows.cols != impl_->d_in)
    throw std::invalid_argument("predict: row width " + std::to_string(rows.cols) +
                                " does not match model dimension " +
                                std::to_string(impl_->d_in));
  std::vector<double> out(rows.rows);
  for (std::size_t i = 0; i < rows.rows; ++i) out[i] = impl_->predict_one(rows.row(i));
  return out;
}

void FittedRegressor::predict_coordinate_sweep(const double* row, std::size_t width,
                                               std::size_t j, const double* values,
                                               std::size_t m, double* out) const {
  if (!impl_) throw std::logic_error("predict on an unfitted regressor");
  if (width != impl_->d_in || j >= impl_->d_in)
    throw std::invalid_argument("predict_coordinate_sweep: bad row width or index");
  impl_->sweep(row, j, values, m, out);
}

// ---------------------------------------------------------------------------
// Random forest

namespace {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  int left = -1;
  int right = -1;
  double value = 0.0;  // threshold for internal nodes, mean for leaves
};

struct Tree {
  std::vector<TreeNode> nodes;
};

class TreeGrower {
 public:
  TreeGrower(const Matrix& x, const std::vector<double>& y, int min_leaf,
             std::size_t mtry, std::uint64_t seed)
      : x_(x), y_(y), min_leaf_(min_leaf), mtry_(mtry), rng_(seed) {}

  Tree grow() {
    const std::size_t n = x_.rows;
    samp_.resize(n);
    for (std::size_t i = 0; i < n; ++i) samp_[i] = rng_.uniform_index(n);
    feat_pool_.resize(x_.cols);
    std::iota(feat_pool_.begin(), feat_pool_.end(), 0);
    Tree t;
    tree_ = &t;
    grow_node(0, n);
    return t;
  }

 private:
  int make_leaf(std::size_t lo, std::size_t hi) {
    double s = 0.0;
    for (std::size_t i = lo; i < hi; ++i) s += y_[samp_[i]];
    TreeNode node;
    node.value = s / static_cast<double>(hi - lo);
    tree_->nodes.push_back(node);
    return static_cast<int>(tree_->nodes.size() - 1);
  }

  int grow_node(std::size_t lo, std::size_t hi) {
    const std::size_t n_node = hi - lo;
    if (n_node < 2 * static_cast<std::size_t>(min_leaf_)) return make_leaf(lo, hi);

    bool pure = true;
    for (std::size_t i = lo + 1; i < hi && pure; ++i)
      pure = y_[samp_[i]] == y_[samp_[lo]];
    if (pure) return make_leaf(lo, hi);

    // mtry distinct candidate features, scanned in ascending order so equal
    // gains resolve to the lowest feature index, then the lowest threshold.
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::size_t r = i + rng_.uniform_index(feat_pool_.size() - i);
      std::swap(feat_pool_[i], feat_pool_[r]);
    }
    std::sort(feat_pool_.begin(), feat_pool_.begin() + static_cast<long>(mtry_));

    double best_gain = -1.0;
    int best_feature = -1;
    double best_threshold = 0.0;
    std::vector<std::pair<double, double>>& vals = scratch_pairs_;
    for (std::size_t c = 0; c < mtry_; ++c) {
      const std::size_t f = feat_pool_[c];
      vals.clear();
      double total = 0.0;
      for (std::size_t i = lo; i < hi; ++i) {
        vals.emplace_back(x_(samp_[i], f), y_[samp_[i]]);
        total += y_[samp_[i]];
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double left_sum = 0.0;
      for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
        left_sum += vals[i].second;
        if (i + 1 < static_cast<std::size_t>(min_leaf_)) continue;
        if (vals.size() - i - 1 < static_cast<std::size_t>(min_leaf_)) break;
        if (!(vals[i].first < vals[i + 1].first)) continue;
        const double nl = static_cast<double>(i + 1);
        const double nr = static_cast<double>(vals.size() - i - 1);
        const double right_sum = total - left_sum;
        const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr;
        if (gain > best_gain) {
          best_gain = gain;
          best_feature = static_cast<int>(f);
          double thr = vals[i].first + (vals[i + 1].first - vals[i].first) / 2.0;
          // Keep the partition consistent with the scan boundary.
          if (!(thr < values_right(vals, i))) thr = vals[i].first;
          best_threshold = thr;
        }
      }
    }
    if (best_feature < 0) return make_leaf(lo, hi);

    auto mid_it = std::partition(
        samp_.begin() + static_cast<long>(lo), samp_.begin() + static_cast<long>(hi),
        [&](std::size_t idx) { return x_(idx, best_feature) <= best_threshold; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - samp_.begin());
    if (mid == lo || mid == hi) return make_leaf(lo, hi);

    const int self = static_cast<int>(tree_->nodes.size());
    tree_->nodes.emplace_back();
    tree_->nodes[self].feature = best_feature;
    tree_->nodes[self].value = best_threshold;
    const int l = grow_node(lo, mid);
    const int r = grow_node(mid, hi);
    tree_->nodes[self].left = l;
    tree_->nodes[self].right = r;
    return self;
  }

  static double values_right(const std::vector<std::pair<double, double>>& vals,
                             std::size_t i) {
    return vals[i + 1].first;
  }

  const Matrix& x_;
  const std::vector<double>& y_;
  int min_leaf_;
  std::size_t mtry_;
  Rng rng_;
  std::vector<std::size_t> samp_;
  std::vector<std::size_t> feat_pool_;
  std::vector<std::pair<double, double>> scratch_pairs_;
  Tree* tree_ = nullptr;
};

struct ForestImpl : FittedRegressor::Impl {
  std::vector<Tree> trees;

  double predict_one(const double* row) const override {
    double s = 0.0;
    for (const Tree& t : trees) {
      int idx = 0;
      const TreeNode* nodes = t.nodes.data();
      while (nodes[idx].feature >= 0)
        idx = row[nodes[idx].feature] <= nodes[idx].value ? nodes[idx].left
                                                          : nodes[idx].right;
      s += nodes[idx].value;
    }
    return s / static_cast<double>(trees.size());
  }

  // Walks each tree once; the m replacement values fan out only at splits on
  // feature j. Leaf sums accumulate in tree order, so the result is
  // bit-identical to m independent predictions.
  void sweep(const double* row, std::size_t j, const double* values, std::size_t m,
             double* out) const override {
    thread_local std::vector<std::size_t> order;
    thread_local std::vector<std::array<std::size_t, 3>> stack;
    order.resize(m);
    for (std::size_t q = 0; q < m; ++q) out[q] = 0.0;
    const int ji = static_cast<int>(j);
    for (const Tree& t : trees) {
      const TreeNode* nodes = t.nodes.data();
      std::iota(order.begin(), order.end(), 0);
      stack.clear();
      stack.push_back({0, 0, m});
      while (!stack.empty()) {
        auto [idx, lo, hi] = stack.back();
        stack.pop_back();
        for (;;) {
          const TreeNode& nd = nodes[idx];
          if (nd.feature < 0) {
            for (std::size_t q = lo; q < hi; ++q) out[order[q]] += nd.value;
            break;
          }
          if (nd.feature == ji) {
            auto mid_it = std::partition(
                order.begin() + static_cast<long>(lo),
                order.begin() + static_cast<long>(hi),
                [&](std::size_t q) { return values[q] <= nd.value; });
            const std::size_t mid = static_cast<std::size_t>(mid_it - order.begin());
            if (mid < hi) stack.push_back({static_cast<std::size_t>(nd.right), mid, hi});
            if (lo < mid) {
              idx = static_cast<std::size_t>(nd.left);
              hi = mid;
              continue;
            }
            break;
          }
          idx = row[nd.feature] <= nd.value ? static_cast<std::size_t>(nd.left)
                                            : static_cast<std::size_t>(nd.right);
        }
      }
    }
    const double scale = static_cast<double>(trees.size());
    for (std::size_t q = 0; q < m; ++q) out[q] /= scale;
  }
};

struct KernelImpl : FittedRegressor::Impl {
  Matrix x;
  std::vector<double> y;
  double bandwidth = 1.0;
  double fallback = 0.0;

  double predict_one(const double* row) const override {
    const double inv = 1.0 / (2.0 * bandwidth * bandwidth);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
      double w = std::exp(-kern::sqdist(x.row(i), row, x.cols) * inv);
      num += w * y[i];
      den += w;
    }
    return den > 0.0 ? num / den : fallback;
  }
};

struct OracleImpl : FittedRegressor::Impl {
  OracleFn fn;
  bool affine = false;
  Matrix l;
  std::vector<double> offset;

  double predict_one(const double* row) const override {
    if (!affine) return fn(row, d_in);
    thread_local std::vector<double> buf;
    buf.resize(l.rows);
    for (std::size_t r = 0; r < l.rows; ++r)
      buf[r] = kern::dot(l.row(r), row, l.cols) + offset[r];
    return fn(buf.data(), buf.size());
  }
};

}  // namespace

FittedRegressor fit(const RegressorConfig& config, const Matrix& x,
                    const std::vector<double>& y) {
  if (x.rows == 0 || x.cols == 0) throw std::invalid_argument("fit: empty data");
  if (x.rows != y.size()) throw std::invalid_argument("fit: x and y lengths differ");

  switch (config.kind) {
    case RegressorKind::random_forest: {
      if (config.n_trees < 1) throw std::invalid_argument("fit: n_trees must be >= 1");
      if (config.min_leaf < 1) throw std::invalid_argument("fit: min_leaf must be >= 1");
      if (!(config.max_features > 0.0 && config.max_features <= 1.0))
        throw std::invalid_argument("fit: max_features must be in (0, 1]");
      if (x.rows < 2 * static_cast<std::size_t>(config.min_leaf))
        throw std::invalid_argument("fit: forest needs at least 2*min_leaf rows");
      auto impl = std::make_shared<ForestImpl>();
      impl->d_in = x.cols;
      impl->n_train = x.rows;
      impl->trees.resize(static_cast<std::size_t>(config.n_trees));
      std::size_t mtry = static_cast<std::size_t>(
          std::ceil(config.max_features * static_cast<double>(x.cols)));
      mtry = std::min(std::max<std::size_t>(mtry, 1), x.cols);
      parallel_for(impl->trees.size(), [&](std::size_t t) {
        TreeGrower grower(x, y, config.min_leaf, mtry,
                          config.seed + static_cast<std::uint64_t>(t));
        impl->trees[t] = grower.grow();
      });
      return FittedRegressor(std::move(impl));
    }
    case RegressorKind::kernel_smoother: {
      if (!(config.bandwidth > 0.0))
        throw std::invalid_argument("fit: bandwidth must be positive");
      auto impl = std::make_shared<KernelImpl>();
      impl->d_in = x.cols;
      impl->n_train = x.rows;
      impl->x = x;
      impl->y = y;
      impl->bandwidth = config.bandwidth;
      impl->fallback = mean(y);
      return FittedRegressor(std::move(impl));
    }
    case RegressorKind::oracle: {
      FittedRegressor r = make_oracle_regressor(oracle_by_name(config.oracle_fn), x.cols);
      return r;
    }
  }
  throw std::logic_error("fit: unknown regressor kind");
}

FittedRegressor make_oracle_regressor(OracleFn fn, std::size_t d_in) {
  if (!fn) throw std::invalid_argument("oracle function is empty");
  auto impl = std::make_shared<OracleImpl>();
  impl->d_in = d_in;
  impl->n_train = 0;
  impl->fn = std::move(fn);
  return FittedRegressor(std::move(impl));
}

FittedRegressor make_oracle_affine(OracleFn fn, Matrix l, std::vector<double> offset) {
  if (!fn) throw std::invalid_argument("oracle function is empty");
  if (l.rows != offset.size())
    throw std::invalid_argument("oracle affine: offset length mismatch");
  auto impl = std::make_shared<OracleImpl>();
  impl->d_in = l.cols;
  impl->n_train = 0;
  impl->fn = std::move(fn);
  impl->affine = true;
  impl->l = std::move(l);
  impl->offset = std::move(offset);
  return FittedRegressor(std::move(impl));
}

OracleFn oracle_by_name(const std::string& name) {
  if (name == "m1_mu" || name == "m4_mu")
    return [](const double* r, std::size_t) { return 5.0 * r[0]; };
  if (name == "m2_mu")
    return [](const double* r, std::size_t) {
      return 5.0 * std::cos(r[0]) + 5.0 * std::cos(r[1]);
    };
  if (name == "m3_mu")
    return [](const double* r, std::size_t) {
      double v = 0.0;
      if (r[2] > 0.0) v += 1.5 * r[0] * r[1];
      if (r[2] < 0.0) v += r[3] * r[4];
      return v;
    };
  throw std::invalid_argument("unknown oracle function: " + name);
}

}  // namespace dfi
