#include "dfi/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dfi/importance.hpp"
#include "dfi/kernels.hpp"
#include "dfi/linalg.hpp"
#include "dfi/rng.hpp"
#include "dfi/stats.hpp"
#include "dfi/threading.hpp"

namespace dfi {

namespace {

Matrix drop_column(const Matrix& x, std::size_t j) {
  Matrix out(x.rows, x.cols - 1);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* src = x.row(r);
    double* dst = out.row(r);
    for (std::size_t c = 0, w = 0; c < x.cols; ++c)
      if (c != j) dst[w++] = src[c];
  }
  return out;
}

void fill_row_without(const double* src, std::size_t d, std::size_t j, double* dst) {
  for (std::size_t c = 0, w = 0; c < d; ++c)
    if (c != j) dst[w++] = src[c];
}

// Linear model x_j ~ [x_-j, 1] fit by least squares; beta has d-1 slopes
// followed by the intercept.
std::vector<double> fit_linear_nu(const Matrix& x, std::size_t j) {
  Matrix a(x.rows, x.cols);
  std::vector<double> b(x.rows);
  for (std::size_t r = 0; r < x.rows; ++r) {
    const double* src = x.row(r);
    double* dst = a.row(r);
    fill_row_without(src, x.cols, j, dst);
    dst[x.cols - 1] = 1.0;
    b[r] = src[j];
  }
  return least_squares(a, b);
}

double eval_linear_nu(const std::vector<double>& beta, const double* row, std::size_t d,
                      std::size_t j, std::vector<double>& scratch) {
  scratch.resize(d - 1);
  fill_row_without(row, d, j, scratch.data());
  return kern::dot(beta.data(), scratch.data(), d - 1) + beta[d - 1];
}

struct SwapData {
  std::vector<std::size_t> idx_nu, idx_ev;
  Matrix x_nu, x_ev;
  std::vector<double> y_nu, y_ev;
  std::vector<double> mu_ev;  // full-model predictions on the held-out rows
  FittedRegressor mu;
  std::uint64_t base = 0;
};

double square(double v) { return v * v; }

// Loss gap for feature j on one swap, LOCO form: the submodel prediction is
// averaged before the loss.
void loco_kernel(const SwapData& sd, const RunConfig& config, std::size_t j,
                 std::vector<double>& kernel) {
  const std::size_t d = sd.x_nu.cols;
  const std::size_t n_ev = sd.x_ev.rows;
  const std::uint64_t fit_seed = mix_seed(sd.base + 1 + 2 * j);
  const std::uint64_t draw_seed = mix_seed(sd.base + 2 + 2 * j);
  kernel.resize(n_ev);

  if (config.regressor.kind == RegressorKind::oracle) {
    const std::vector<double> beta = fit_linear_nu(sd.x_nu, j);
    std::vector<double> scratch;
    std::vector<double> resid(sd.x_nu.rows);
    for (std::size_t r = 0; r < sd.x_nu.rows; ++r)
      resid[r] = sd.x_nu(r, j) - eval_linear_nu(beta, sd.x_nu.row(r), d, j, scratch);
    const double sigma_j = sample_sd(resid);

    const std::size_t kdraws = static_cast<std::size_t>(config.m_resamples);
    Rng rng(draw_seed);
    std::vector<double> w(kdraws);
    for (double& v : w) v = rng.normal();
    std::vector<double> values(kdraws), preds(kdraws);
    for (std::size_t r = 0; r < n_ev; ++r) {
      const double* row = sd.x_ev.row(r);
      const double nu = eval_linear_nu(beta, row, d, j, scratch);
      for (std::size_t q = 0; q < kdraws; ++q) values[q] = nu + sigma_j * w[q];
      sd.mu.predict_coordinate_sweep(row, d, j, values.data(), kdraws, preds.data());
      const double mu_sub = kern::sum(preds.data(), kdraws) / static_cast<double>(kdraws);
      kernel[r] = square(sd.y_ev[r] - mu_sub) - square(sd.y_ev[r] - sd.mu_ev[r]);
    }
    return;
  }

  // Refit without column j; with a single feature the submodel degenerates to
  // the training mean.
  if (d == 1) {
    const double ybar = mean(sd.y_nu);
    for (std::size_t r = 0; r < n_ev; ++r)
      kernel[r] = square(sd.y_ev[r] - ybar) - square(sd.y_ev[r] - sd.mu_ev[r]);
    return;
  }
  RegressorConfig rc = config.regressor;
  rc.seed = fit_seed;
  const FittedRegressor sub = fit(rc, drop_column(sd.x_nu, j), sd.y_nu);
  std::vector<double> scratch(d - 1);
  for (std::size_t r = 0; r < n_ev; ++r) {
    fill_row_without(sd.x_ev.row(r), d, j, scratch.data());
    const double pred = sub.predict_one(scratch.data(), d - 1);
    kernel[r] = square(sd.y_ev[r] - pred) - square(sd.y_ev[r] - sd.mu_ev[r]);
  }
}

// Loss gap for feature j on one swap, CPI form: feature j is swapped for
// nu_j(x_-j) plus a donor residual and the per-draw losses are averaged.
void cpi_kernel(const SwapData& sd, const RunConfig& config, std::size_t j,
                std::vector<double>& kernel) {
  const std::size_t d = sd.x_nu.cols;
  const std::size_t n_ev = sd.x_ev.rows;
  const std::uint64_t fit_seed = mix_seed(sd.base + 1 + 2 * j);
  const std::uint64_t draw_seed = mix_seed(sd.base + 2 + 2 * j);
  kernel.resize(n_ev);

  std::vector<double> nu_ev(n_ev);
  if (config.regressor.kind == RegressorKind::oracle) {
    const std::vector<double> beta = fit_linear_nu(sd.x_nu, j);
    std::vector<double> scratch;
    for (std::size_t r = 0; r < n_ev; ++r)
      nu_ev[r] = eval_linear_nu(beta, sd.x_ev.row(r), d, j, scratch);
  } else if (d == 1) {
    const double xbar = mean(std::vector<double>(
        sd.x_nu.a.begin(), sd.x_nu.a.end()));  // single column, all entries
    std::fill(nu_ev.begin(), nu_ev.end(), xbar);
  } else {
    std::vector<double> xj_nu(sd.x_nu.rows);
    for (std::size_t r = 0; r < sd.x_nu.rows; ++r) xj_nu[r] = sd.x_nu(r, j);
    RegressorConfig rc = config.regressor;
    rc.seed = fit_seed;
    const FittedRegressor nu = fit(rc, drop_column(sd.x_nu, j), xj_nu);
    std::vector<double> scratch(d - 1);
    for (std::size_t r = 0; r < n_ev; ++r) {
      fill_row_without(sd.x_ev.row(r), d, j, scratch.data());
      nu_ev[r] = nu.predict_one(scratch.data(), d - 1);
    }
  }

  std::vector<double> resid(n_ev);
  for (std::size_t r = 0; r < n_ev; ++r) resid[r] = sd.x_ev(r, j) - nu_ev[r];

  const std::size_t m = static_cast<std::size_t>(config.m_resamples);
  Rng rng(draw_seed);
  std::vector<double> values(m), preds(m);
  for (std::size_t r = 0; r < n_ev; ++r) {
    const double* row = sd.x_ev.row(r);
    for (std::size_t q = 0; q < m; ++q)
      values[q] = nu_ev[r] + resid[rng.uniform_index(n_ev)];
    sd.mu.predict_coordinate_sweep(row, d, j, values.data(), m, preds.data());
    const double base = square(sd.y_ev[r] - sd.mu_ev[r]);
    double acc = 0.0;
    for (std::size_t q = 0; q < m; ++q) acc += square(sd.y_ev[r] - preds[q]) - base;
    kernel[r] = acc / (2.0 * static_cast<double>(m));
  }
}

BaselineResult run_baseline(const Dataset& ds, const RunConfig& config, OracleFn oracle,
                            BaselineMethod method) {
  ds.validate();
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  if (config.n_folds < 2)
    throw std::invalid_argument("baseline: n_folds must be >= 2");
  if (config.m_resamples < 1)
    throw std::invalid_argument("baseline: m_resamples must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("baseline: alpha must be in (0, 1)");
  OracleFn fn = std::move(oracle);
  if (config.regressor.kind == RegressorKind::oracle && !fn) {
    if (config.regressor.oracle_fn.empty())
      throw std::invalid_argument("baseline: oracle regressor needs a function name");
    fn = oracle_by_name(config.regressor.oracle_fn);
  }

  const int k = config.n_folds;
  const FoldAssignment folds = split_folds(n, k, mix_seed(config.seed ^ seeds::folds));
  const std::uint64_t salt =
      method == BaselineMethod::loco ? seeds::baseline_loco : seeds::baseline_cpi;
  const std::uint64_t mbase = mix_seed(config.seed ^ salt);

  Matrix kernels(d, n);
  Matrix psi_swap(static_cast<std::size_t>(k), d);
  std::vector<std::size_t> n_eval(static_cast<std::size_t>(k), 0);

  for (int s = 0; s < k; ++s) {
    SwapData sd;
    for (std::size_t i = 0; i < n; ++i)
      (folds.fold_of[i] == s ? sd.idx_ev : sd.idx_nu).push_back(i);
    n_eval[static_cast<std::size_t>(s)] = sd.idx_ev.size();
    sd.x_nu = Matrix(sd.idx_nu.size(), d);
    sd.x_ev = Matrix(sd.idx_ev.size(), d);
    sd.y_nu.resize(sd.idx_nu.size());
    sd.y_ev.resize(sd.idx_ev.size());
    for (std::size_t r = 0; r < sd.idx_nu.size(); ++r) {
      std::copy(ds.x.row(sd.idx_nu[r]), ds.x.row(sd.idx_nu[r]) + d, sd.x_nu.row(r));
      sd.y_nu[r] = ds.y[sd.idx_nu[r]];
    }
    for (std::size_t r = 0; r < sd.idx_ev.size(); ++r) {
      std::copy(ds.x.row(sd.idx_ev[r]), ds.x.row(sd.idx_ev[r]) + d, sd.x_ev.row(r));
      sd.y_ev[r] = ds.y[sd.idx_ev[r]];
    }
    sd.base = mix_seed(mbase + static_cast<std::uint64_t>(s));

    if (config.regressor.kind == RegressorKind::oracle) {
      sd.mu = make_oracle_regressor(fn, d);
    } else {
      RegressorConfig rc = config.regressor;
      rc.seed = mix_seed(sd.base);
      sd.mu = fit(rc, sd.x_nu, sd.y_nu);
    }
    sd.mu_ev = sd.mu.predict(sd.x_ev);

    std::vector<std::vector<double>> per_j(d);
    parallel_for(d, [&](std::size_t j) {
      if (method == BaselineMethod::loco)
        loco_kernel(sd, config, j, per_j[j]);
      else
        cpi_kernel(sd, config, j, per_j[j]);
    });
    for (std::size_t j = 0; j < d; ++j) {
      psi_swap(static_cast<std::size_t>(s), j) = mean(per_j[j]);
      for (std::size_t r = 0; r < sd.idx_ev.size(); ++r)
        kernels(j, sd.idx_ev[r]) = per_j[j][r];
    }
  }

  BaselineResult out;
  out.method = method;
  const InferenceSettings settings{config.alpha, config.inflate_near_null};
  for (std::size_t j = 0; j < d; ++j) {
    double psi = 0.0;
    for (int s = 0; s < k; ++s) psi += psi_swap(static_cast<std::size_t>(s), j);
    psi /= static_cast<double>(k);
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(folds.fold_of[i]);
      const double f = static_cast<double>(n) /
                       (static_cast<double>(k) * static_cast<double>(n_eval[s]));
      h[i] = f * kernels(j, i) - psi;
    }
    out.estimates.push_back(infer(ds.feature_names[j], psi, std::move(h), settings));
  }
  return out;
}

}  // namespace

BaselineResult loco_importance(const Dataset& ds, const RunConfig& config,
                               OracleFn oracle) {
  return run_baseline(ds, config, std::move(oracle), BaselineMethod::loco);
}

BaselineResult cpi_importance(const Dataset& ds, const RunConfig& config,
                              OracleFn oracle) {
  return run_baseline(ds, config, std::move(oracle), BaselineMethod::cpi);
}

std::string to_string(BaselineMethod m) {
  return m == BaselineMethod::loco ? "loco" : "cpi";
}

}  // namespace dfi
