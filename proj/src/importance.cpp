#include "dfi/importance.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "dfi/kernels.hpp"
#include "dfi/rng.hpp"
#include "dfi/stats.hpp"
#include "dfi/threading.hpp"

namespace dfi {

LatentImportanceResult latent_importance(const FittedRegressor& eta, const Matrix& z_eval,
                                         const std::vector<double>& y_eval, std::size_t j,
                                         int m, std::uint64_t seed, ResampleMode mode,
                                         LatentEstimator kind) {
  if (!eta.valid()) throw std::invalid_argument("latent_importance: unfitted regressor");
  const std::size_t n = z_eval.rows;
  const std::size_t d = z_eval.cols;
  if (n == 0) throw std::invalid_argument("latent_importance: no evaluation rows");
  if (y_eval.size() != n)
    throw std::invalid_argument("latent_importance: y length mismatch");
  if (j >= d) throw std::invalid_argument("latent_importance: coordinate out of range");
  if (mode == ResampleMode::draws && m < 1)
    throw std::invalid_argument("latent_importance: m must be >= 1");

  const std::size_t m_used = mode == ResampleMode::draws ? static_cast<std::size_t>(m) : n;

  Rng rng(seed);
  std::vector<double> values(m_used), preds(m_used);
  if (mode == ResampleMode::full_support)
    for (std::size_t q = 0; q < n; ++q) values[q] = z_eval(q, j);

  LatentImportanceResult out;
  out.j = j;
  out.m_used = static_cast<int>(m_used);
  out.influence_values.resize(n);
  std::vector<double>& kernel = out.influence_values;  // recentered in place below

  for (std::size_t i = 0; i < n; ++i) {
    const double* row = z_eval.row(i);
    const double eta_i = eta.predict_one(row, d);
    if (mode == ResampleMode::draws)
      for (std::size_t q = 0; q < m_used; ++q) values[q] = z_eval(rng.uniform_index(n), j);
    eta.predict_coordinate_sweep(row, d, j, values.data(), m_used, preds.data());
    const double y = y_eval[i];
    if (kind == LatentEstimator::loco_type) {
      const double eta_bar =
          kern::sum(preds.data(), m_used) / static_cast<double>(m_used);
      const double delta = eta_i - eta_bar;
      kernel[i] = 2.0 * (y - eta_i) * delta + delta * delta;
    } else {
      const double base = (y - eta_i) * (y - eta_i);
      double acc = 0.0;
      for (std::size_t q = 0; q < m_used; ++q) {
        const double r = y - preds[q];
        acc += r * r - base;
      }
      kernel[i] = acc / (2.0 * static_cast<double>(m_used));
    }
  }
  out.phi_hat = mean(kernel);
  for (double& v : kernel) v -= out.phi_hat;
  return out;
}

std::vector<AttributedImportanceResult> attribute(
    const std::vector<LatentImportanceResult>& latents, const AttributionWeights& w) {
  const std::size_t d = w.w.rows;
  const std::size_t p = w.w.cols;
  if (d == 0 || p == 0) throw std::invalid_argument("attribute: empty weights");
  if (latents.size() != d)
    throw std::invalid_argument("attribute: latent count does not match weight rows");
  const std::size_t n = latents[0].influence_values.size();
  for (const auto& lat : latents)
    if (lat.influence_values.size() != n)
      throw std::invalid_argument("attribute: influence lengths differ");

  std::vector<AttributedImportanceResult> out(p);
  for (std::size_t l = 0; l < p; ++l) {
    double phi = 0.0;
    for (std::size_t j = 0; j < d; ++j) phi += w.w(j, l) * latents[j].phi_hat;
    out[l].l = l;
    out[l].phi_hat = phi;
    out[l].influence_values.assign(n, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double wj = w.w(j, l);
      const double phij = latents[j].phi_hat;
      const double* infl = latents[j].influence_values.data();
      for (std::size_t i = 0; i < n; ++i)
        out[l].influence_values[i] += wj * (infl[i] + phij);
    }
    for (double& v : out[l].influence_values) v -= phi;
  }
  return out;
}

ImportanceEstimate infer(const std::string& name, double estimate,
                         std::vector<double> influence, const InferenceSettings& s) {
  const std::size_t n = influence.size();
  if (n < 2) throw std::invalid_argument("infer: need at least 2 influence values");
  if (!(s.alpha > 0.0 && s.alpha < 1.0))
    throw std::invalid_argument("infer: alpha must be in (0, 1)");

  const double se = std::sqrt(sample_variance(influence) / static_cast<double>(n));
  const double q_two = normal_quantile(1.0 - s.alpha / 2.0);

  // Inflating the variance by n^{-1/2}/z_{1-alpha} widens the interval and
  // keeps the test statistic finite under a true null, where the influence
  // function degenerates. Only meaningful for alpha < 1/2.
  double var_infl = se * se;
  if (s.inflate_near_null && s.alpha < 0.5)
    var_infl += 1.0 / (std::sqrt(static_cast<double>(n)) * normal_quantile(1.0 - s.alpha));
  double se_infl = std::sqrt(var_infl);

  ImportanceEstimate e;
  e.name = name;
  e.estimate = estimate;
  e.std_error = se;
  e.ci_low = estimate - q_two * se_infl;
  e.ci_high = estimate + q_two * se_infl;
  if (se_infl == 0.0 && estimate == 0.0) {
    e.z_score = 0.0;
    e.p_value = 1.0;
  } else {
    se_infl = std::max({se_infl, std::abs(estimate) * 1e-15, 1e-300});
    e.z_score = estimate / se_infl;
    e.p_value = 1.0 - normal_cdf(e.z_score);
  }
  e.influence_values = std::move(influence);
  return e;
}

ImportanceEstimate group_importance(const std::string& name,
                                    const std::vector<ImportanceEstimate>& attributed,
                                    const std::vector<std::size_t>& members,
                                    const InferenceSettings& s) {
  if (members.empty()) throw std::invalid_argument("group_importance: empty group");
  double est = 0.0;
  std::vector<double> infl;
  bool first = true;
  for (std::size_t idx : members) {
    if (idx >= attributed.size())
      throw std::invalid_argument("group_importance: member index out of range");
    const auto& e = attributed[idx];
    est += e.estimate;
    if (first) {
      infl.assign(e.influence_values.size(), 0.0);
      first = false;
    }
    if (e.influence_values.size() != infl.size())
      throw std::invalid_argument("group_importance: influence lengths differ");
    for (std::size_t i = 0; i < infl.size(); ++i) infl[i] += e.influence_values[i];
  }
  return infer(name, est, std::move(infl), s);
}

namespace {

std::vector<double> column_means(const Matrix& x, const std::vector<std::size_t>& rows) {
  std::vector<double> mu(x.cols, 0.0);
  for (std::size_t r : rows) {
    const double* xr = x.row(r);
    for (std::size_t c = 0; c < x.cols; ++c) mu[c] += xr[c];
  }
  for (double& v : mu) v /= static_cast<double>(rows.size());
  return mu;
}

Matrix gather_rows(const Matrix& x, const std::vector<std::size_t>& rows) {
  Matrix out(rows.size(), x.cols);
  for (std::size_t r = 0; r < rows.size(); ++r)
    std::copy(x.row(rows[r]), x.row(rows[r]) + x.cols, out.row(r));
  return out;
}

// z = l_inv * (x - center), one output row per selected input row.
Matrix to_latent(const Matrix& x, const std::vector<std::size_t>& rows,
                 const std::vector<double>& center, const Matrix& l_inv) {
  const std::size_t d = x.cols;
  Matrix z(rows.size(), d);
  std::vector<double> tmp(d);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const double* xr = x.row(rows[r]);
    for (std::size_t c = 0; c < d; ++c) tmp[c] = xr[c] - center[c];
    for (std::size_t c = 0; c < d; ++c) z(r, c) = kern::dot(l_inv.row(c), tmp.data(), d);
  }
  return z;
}

void check_centered(const ImportanceEstimate& e) {
  const double m = mean(e.influence_values);
  if (std::abs(m) > 1e-10 * std::max(1.0, std::abs(e.estimate)))
    throw std::logic_error("run_dfi: influence values for " + e.name +
                           " are not centered");
}

// Names the features loading on the null directions so a singular covariance
// error points at the dependent block. Mirrors the transport's default
// eigenvalue floor.
[[noreturn]] void rethrow_singular(const std::runtime_error& e, const Matrix& sigma,
                                   const std::vector<std::string>& names) {
  const EigenSym eig = jacobi_eigen(sigma);
  const double eps = 1e-10 * std::max(eig.values.back(), 0.0);
  std::vector<bool> in_block(names.size(), false);
  for (std::size_t idx = 0; idx < eig.values.size(); ++idx) {
    if (eig.values[idx] > eps) continue;
    double vmax = 0.0;
    for (std::size_t i = 0; i < names.size(); ++i)
      vmax = std::max(vmax, std::abs(eig.vectors(i, idx)));
    for (std::size_t i = 0; i < names.size(); ++i)
      if (std::abs(eig.vectors(i, idx)) >= 0.1 * vmax) in_block[i] = true;
  }
  std::string msg = e.what();
  std::string block;
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!in_block[i]) continue;
    if (!block.empty()) block += ", ";
    block += names[i];
  }
  if (block.empty()) throw e;
  throw std::runtime_error(msg + "; dependent feature block: " + block);
}

}  // namespace

ImportanceReport run_dfi(const Dataset& ds, const RunConfig& config) {
  return run_dfi(ds, config, RunOverrides{});
}

ImportanceReport run_dfi(const Dataset& ds, const RunConfig& config,
                         const RunOverrides& ov) {
  ds.validate();
  const std::size_t n = ds.n();
  const std::size_t d = ds.d();
  if (config.n_folds < 2) throw std::invalid_argument("run_dfi: n_folds must be >= 2");
  if (ov.resample_mode == ResampleMode::draws && config.m_resamples < 1)
    throw std::invalid_argument("run_dfi: m_resamples must be >= 1");
  if (!(config.alpha > 0.0 && config.alpha < 1.0))
    throw std::invalid_argument("run_dfi: alpha must be in (0, 1)");
  if (ov.sigma && (ov.sigma->rows != d || ov.sigma->cols != d))
    throw std::invalid_argument("run_dfi: sigma override has wrong shape");
  if (ov.center && ov.center->size() != d)
    throw std::invalid_argument("run_dfi: center override has wrong length");
  if (config.regressor.kind == RegressorKind::oracle && !ov.oracle &&
      config.regressor.oracle_fn.empty())
    throw std::invalid_argument("run_dfi: oracle regressor needs a function name");

  const int k = config.n_folds;
  const FoldAssignment folds = split_folds(n, k, mix_seed(config.seed ^ seeds::folds));

  Matrix kernels(d, n);  // per-row latent kernels, placed at original indices
  std::vector<Matrix> w_swap(static_cast<std::size_t>(k));
  Matrix phi_swap(static_cast<std::size_t>(k), d);
  Matrix c_swap(static_cast<std::size_t>(k), d);
  std::vector<std::size_t> n_eval(static_cast<std::size_t>(k), 0);

  const std::uint64_t reg_base = mix_seed(config.seed ^ seeds::regressor);
  const std::uint64_t lat_base = mix_seed(config.seed ^ seeds::latent);

  for (int s = 0; s < k; ++s) {
    std::vector<std::size_t> idx_nu, idx_ev;
    for (std::size_t i = 0; i < n; ++i)
      (folds.fold_of[i] == s ? idx_ev : idx_nu).push_back(i);
    n_eval[static_cast<std::size_t>(s)] = idx_ev.size();

    const std::vector<double> center =
        ov.center ? *ov.center : column_means(ds.x, idx_nu);

    Matrix sigma;
    if (ov.sigma) {
      sigma = *ov.sigma;
    } else {
      Dataset sub;
      sub.feature_names = ds.feature_names;
      sub.x = gather_rows(ds.x, idx_nu);
      sub.y.resize(idx_nu.size());
      for (std::size_t r = 0; r < idx_nu.size(); ++r) sub.y[r] = ds.y[idx_nu[r]];
      sigma = estimate_covariance(sub).sigma;
    }
    LinearTransport t;
    try {
      t = transport_from_covariance(sigma, config.transport_kind);
    } catch (const std::runtime_error& e) {
      rethrow_singular(e, sigma, ds.feature_names);
    }
    w_swap[static_cast<std::size_t>(s)] = attribution_weights(t).w;
    const Matrix& w = w_swap[static_cast<std::size_t>(s)];

    const Matrix z_ev = to_latent(ds.x, idx_ev, center, t.l_inv);
    std::vector<double> y_ev(idx_ev.size());
    for (std::size_t r = 0; r < idx_ev.size(); ++r) y_ev[r] = ds.y[idx_ev[r]];

    FittedRegressor eta;
    if (config.regressor.kind == RegressorKind::oracle) {
      OracleFn fn = ov.oracle ? ov.oracle : oracle_by_name(config.regressor.oracle_fn);
      eta = make_oracle_affine(std::move(fn), t.l, center);
    } else {
      const Matrix z_nu = to_latent(ds.x, idx_nu, center, t.l_inv);
      std::vector<double> y_nu(idx_nu.size());
      for (std::size_t r = 0; r < idx_nu.size(); ++r) y_nu[r] = ds.y[idx_nu[r]];
      RegressorConfig rc = config.regressor;
      rc.seed = mix_seed(reg_base + static_cast<std::uint64_t>(s));
      eta = fit(rc, z_nu, y_nu);
    }

    const std::uint64_t base = mix_seed(lat_base + static_cast<std::uint64_t>(s));
    std::vector<LatentImportanceResult> lat(d);
    parallel_for(d, [&](std::size_t j) {
      lat[j] = latent_importance(eta, z_ev, y_ev, j, config.m_resamples, base + j,
                                 ov.resample_mode, ov.estimator);
    });

    for (std::size_t j = 0; j < d; ++j) {
      phi_swap(static_cast<std::size_t>(s), j) = lat[j].phi_hat;
      c_swap(static_cast<std::size_t>(s), j) = kern::sum(w.row(j), d);
      const auto& infl = lat[j].influence_values;
      for (std::size_t r = 0; r < idx_ev.size(); ++r)
        kernels(j, idx_ev[r]) = infl[r] + lat[j].phi_hat;
    }
  }

  // Weight-aware pooling. Per-swap attributed values average directly; the
  // latent side pools with the attribution row sums c so that
  // sum_j sigma_diag[j] * latent[j] still equals the attributed total.
  std::vector<double> phi_bar(d, 0.0), attr(d, 0.0), sigma_diag(d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    double num = 0.0, den = 0.0;
    for (int s = 0; s < k; ++s) {
      num += c_swap(static_cast<std::size_t>(s), j) *
             phi_swap(static_cast<std::size_t>(s), j);
      den += c_swap(static_cast<std::size_t>(s), j);
    }
    if (!(den > 0.0)) throw std::logic_error("run_dfi: degenerate attribution weights");
    phi_bar[j] = num / den;
    sigma_diag[j] = den / static_cast<double>(k);
  }
  for (std::size_t l = 0; l < d; ++l) {
    double a = 0.0;
    for (int s = 0; s < k; ++s)
      for (std::size_t j = 0; j < d; ++j)
        a += w_swap[static_cast<std::size_t>(s)](j, l) *
             phi_swap(static_cast<std::size_t>(s), j);
    attr[l] = a / static_cast<double>(k);
  }

  const InferenceSettings settings{config.alpha, config.inflate_near_null};
  ImportanceReport report;
  report.config = config;
  report.sigma_diag = sigma_diag;
  report.standardized = false;

  for (std::size_t j = 0; j < d; ++j) {
    const double den = sigma_diag[j] * static_cast<double>(k);
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(folds.fold_of[i]);
      const double f = static_cast<double>(n) * c_swap(s, j) /
                       (den * static_cast<double>(n_eval[s]));
      h[i] = f * kernels(j, i) - phi_bar[j];
    }
    report.latent.push_back(
        infer("z" + std::to_string(j + 1), phi_bar[j], std::move(h), settings));
  }
  for (std::size_t l = 0; l < d; ++l) {
    std::vector<double> h(n);
    for (std::size_t i = 0; i < n; ++i) {
      const auto s = static_cast<std::size_t>(folds.fold_of[i]);
      double a = 0.0;
      for (std::size_t j = 0; j < d; ++j) a += w_swap[s](j, l) * kernels(j, i);
      const double f = static_cast<double>(n) /
                       (static_cast<double>(k) * static_cast<double>(n_eval[s]));
      h[i] = f * a - attr[l];
    }
    report.attributed.push_back(infer(ds.feature_names[l], attr[l], std::move(h), settings));
  }

  double total_latent = 0.0, total_attr = 0.0, weighted = 0.0;
  for (std::size_t j = 0; j < d; ++j) {
    total_latent += phi_bar[j];
    weighted += sigma_diag[j] * phi_bar[j];
  }
  for (std::size_t l = 0; l < d; ++l) total_attr += attr[l];
  report.total_latent = total_latent;
  report.total_attributed = total_attr;

  if (std::abs(weighted - total_attr) > 1e-10 * std::max(1.0, std::abs(total_attr)))
    throw std::logic_error("run_dfi: decomposition identity violated");
  for (const auto& e : report.latent) check_centered(e);
  for (const auto& e : report.attributed) check_centered(e);

  return report;
}

}  // namespace dfi
