#include "dfi/simulation.hpp"

#include <cmath>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "dfi/kernels.hpp"
#include "dfi/linalg.hpp"
#include "dfi/regression.hpp"
#include "dfi/render.hpp"
#include "dfi/rng.hpp"
#include "dfi/stats.hpp"

namespace dfi {

void ModelSpec::validate() const {
  if (n < 10) throw std::invalid_argument("model spec: n must be >= 10");
  if (model == Model::m4) {
    if (rho != 0.0)
      throw std::invalid_argument("model spec: m4 has no correlation parameter");
  } else if (!(rho >= 0.0 && rho < 1.0)) {
    throw std::invalid_argument("model spec: rho must be in [0, 1)");
  }
}

std::size_t model_dim(Model m) { return m == Model::m3 ? 5 : 10; }

Matrix model_sigma(Model m, double rho) {
  Matrix s = Matrix::identity(model_dim(m));
  switch (m) {
    case Model::m1:
    case Model::m2:
      s(0, 1) = s(1, 0) = rho;
      break;
    case Model::m3:
      s(0, 1) = s(1, 0) = rho;
      s(3, 4) = s(4, 3) = rho;
      break;
    case Model::m4:
      s(1, 1) = 19.0;  // var(3 X1^2 + delta) = 9*2 + 1
      break;
  }
  return s;
}

std::vector<double> model_mean(Model m) {
  std::vector<double> mu(model_dim(m), 0.0);
  if (m == Model::m4) mu[1] = 3.0;  // E[3 X1^2 + delta]
  return mu;
}

std::string model_oracle_name(Model m) {
  switch (m) {
    case Model::m1:
      return "m1_mu";
    case Model::m2:
      return "m2_mu";
    case Model::m3:
      return "m3_mu";
    case Model::m4:
      return "m4_mu";
  }
  return {};
}

std::string to_string(Model m) {
  switch (m) {
    case Model::m1:
      return "m1";
    case Model::m2:
      return "m2";
    case Model::m3:
      return "m3";
    case Model::m4:
      return "m4";
  }
  return {};
}

Model model_from_string(const std::string& s) {
  if (s == "m1") return Model::m1;
  if (s == "m2") return Model::m2;
  if (s == "m3") return Model::m3;
  if (s == "m4") return Model::m4;
  throw std::invalid_argument("unknown model: " + s);
}

Dataset generate(const ModelSpec& spec) {
  spec.validate();
  const std::size_t d = model_dim(spec.model);
  const std::size_t n = spec.n;
  Dataset ds;
  ds.feature_names.resize(d);
  for (std::size_t c = 0; c < d; ++c) ds.feature_names[c] = "x" + std::to_string(c + 1);
  ds.x = Matrix(n, d);
  ds.y.resize(n);
  Rng rng(spec.seed);

  if (spec.model == Model::m4) {
    for (std::size_t i = 0; i < n; ++i) {
      double* row = ds.x.row(i);
      const double x1 = rng.normal();
      row[0] = x1;
      for (std::size_t c = 2; c < d; ++c) row[c] = rng.normal();
      const double delta = rng.normal();
      const double eps = rng.normal();
      row[1] = 3.0 * x1 * x1 + delta;
      ds.y[i] = 5.0 * x1 + eps;
    }
    return ds;
  }

  const Matrix lg = cholesky_lower(model_sigma(spec.model, spec.rho));
  const double noise_sd = spec.model == Model::m3 ? std::sqrt(0.4) : 1.0;
  std::vector<double> u(d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t c = 0; c < d; ++c) u[c] = rng.normal();
    const double eps = noise_sd * rng.normal();
    double* row = ds.x.row(i);
    for (std::size_t r = 0; r < d; ++r) row[r] = kern::dot(lg.row(r), u.data(), r + 1);
    switch (spec.model) {
      case Model::m1:
        ds.y[i] = 5.0 * row[0] + eps;
        break;
      case Model::m2:
        ds.y[i] = 5.0 * std::cos(row[0]) + 5.0 * std::cos(row[1]) + eps;
        break;
      case Model::m3: {
        double v = 0.0;
        if (row[2] > 0.0) v += 1.5 * row[0] * row[1];
        if (row[2] < 0.0) v += row[3] * row[4];
        ds.y[i] = v + eps;
        break;
      }
      case Model::m4:
        break;
    }
  }
  return ds;
}

TheoreticalValues theoretical_values(Model m, double rho) {
  TheoreticalValues tv;
  switch (m) {
    case Model::m1: {
      const double a = 0.5 * (std::sqrt(1.0 + rho) + std::sqrt(1.0 - rho));
      const double b = 0.5 * (std::sqrt(1.0 + rho) - std::sqrt(1.0 - rho));
      const double a2 = a * a;
      const double b2 = b * b;
      std::vector<double> lat(10, 0.0), att(10, 0.0);
      lat[0] = 25.0 * a2;
      lat[1] = 25.0 * b2;
      att[0] = 25.0 * (a2 * a2 + b2 * b2);
      att[1] = 50.0 * a2 * b2;
      tv.phi_latent = std::move(lat);
      tv.phi_attributed = std::move(att);
      tv.total_signal_variance = 25.0;
      break;
    }
    case Model::m2:
      tv.total_signal_variance = 25.0 + 25.0 * std::exp(-2.0) - 100.0 * std::exp(-1.0) +
                                 50.0 * std::exp(-1.0) * std::cosh(rho);
      break;
    case Model::m3: {
      // The symmetric correlated pairs make latent and attributed values
      // coincide feature by feature. phi[3]: with z3 < 0 (probability 1/2),
      // var over z4 of (rho/2)z4^2 + z5 z4 is rho^2/2 + z5^2, so
      // phi = (1/2)(rho^2/2 + 1); cross-checked by brute-force resampling.
      std::vector<double> phi(5);
      phi[0] = phi[1] = (9.0 / 16.0) * (rho * rho + 2.0);
      phi[2] = (1.0 / 16.0) * (14.0 * rho * rho + 13.0);
      phi[3] = phi[4] = (1.0 / 4.0) * (rho * rho + 2.0);
      tv.phi_latent = phi;
      tv.phi_attributed = std::move(phi);
      break;
    }
    case Model::m4:
      throw std::invalid_argument("theoretical values not available for m4");
  }
  return tv;
}

namespace {

StudyResult run_study(const ModelSpec& spec, const RunConfig& config, int reps,
                      bool with_coverage) {
  spec.validate();
  if (reps < 1) throw std::invalid_argument("study: reps must be >= 1");
  const std::size_t d = model_dim(spec.model);

  StudyResult out;
  out.spec = spec;
  out.config = config;
  out.reps = reps;
  out.coverage_study = with_coverage;
  out.features.resize(d);
  for (std::size_t c = 0; c < d; ++c) out.features[c] = "x" + std::to_string(c + 1);

  const bool oracle = config.regressor.kind == RegressorKind::oracle;
  if (oracle && out.config.regressor.oracle_fn.empty())
    out.config.regressor.oracle_fn = model_oracle_name(spec.model);

  if (spec.model != Model::m4) {
    const TheoreticalValues tv = theoretical_values(spec.model, spec.rho);
    if (tv.phi_attributed) out.truth = tv.phi_attributed;
    if (tv.total_signal_variance) out.total_truth = tv.total_signal_variance;
  }
  if (with_coverage && !out.truth)
    throw std::invalid_argument("coverage study needs per-feature theoretical values");

  out.estimates.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    ModelSpec sr = spec;
    sr.seed = spec.seed + static_cast<std::uint64_t>(r);
    const Dataset ds = generate(sr);

    RunConfig rc = out.config;
    rc.seed = config.seed + static_cast<std::uint64_t>(r);
    RunOverrides ov;
    if (oracle) {
      ov.sigma = model_sigma(spec.model, spec.rho);
      ov.center = model_mean(spec.model);
      ov.oracle = oracle_by_name(out.config.regressor.oracle_fn);
    }
    ImportanceReport rep = run_dfi(ds, rc, ov);
    std::vector<ImportanceEstimate> row = std::move(rep.attributed);
    for (auto& e : row) {
      e.influence_values.clear();
      e.influence_values.shrink_to_fit();
    }
    out.estimates.push_back(std::move(row));
    out.totals.push_back(rep.total_attributed);
  }

  out.mean_estimate.resize(d);
  out.sd_estimate.resize(d);
  std::vector<double> column(static_cast<std::size_t>(reps));
  for (std::size_t l = 0; l < d; ++l) {
    for (int r = 0; r < reps; ++r)
      column[static_cast<std::size_t>(r)] = out.estimates[static_cast<std::size_t>(r)][l].estimate;
    out.mean_estimate[l] = mean(column);
    out.sd_estimate[l] = reps > 1 ? sample_sd(column) : 0.0;
  }

  if (with_coverage) {
    std::vector<double> cov(d, 0.0);
    for (std::size_t l = 0; l < d; ++l) {
      const double t = (*out.truth)[l];
      int hits = 0;
      for (int r = 0; r < reps; ++r) {
        const auto& e = out.estimates[static_cast<std::size_t>(r)][l];
        if (e.ci_low <= t && t <= e.ci_high) ++hits;
      }
      cov[l] = static_cast<double>(hits) / static_cast<double>(reps);
    }
    double acc = 0.0;
    int nulls = 0;
    for (std::size_t l = 0; l < d; ++l) {
      if ((*out.truth)[l] == 0.0) {
        acc += cov[l];
        ++nulls;
      }
    }
    out.coverage = std::move(cov);
    if (nulls > 0) out.null_coverage_average = acc / static_cast<double>(nulls);
  }
  return out;
}

}  // namespace

StudyResult replication_study(const ModelSpec& spec, const RunConfig& config, int reps) {
  return run_study(spec, config, reps, false);
}

StudyResult coverage_study(const ModelSpec& spec, const RunConfig& config, int reps) {
  return run_study(spec, config, reps, true);
}

void write_replicates_csv(const StudyResult& study, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << "replicate,feature,estimate,se,ci_lo,ci_hi,covered\n";
  for (int r = 0; r < study.reps; ++r) {
    for (std::size_t l = 0; l < study.features.size(); ++l) {
      const auto& e = study.estimates[static_cast<std::size_t>(r)][l];
      f << r << ',' << study.features[l] << ',' << format_double(e.estimate) << ','
        << format_double(e.std_error) << ',' << format_double(e.ci_low) << ','
        << format_double(e.ci_high) << ',';
      if (study.truth) {
        const double t = (*study.truth)[l];
        f << ((e.ci_low <= t && t <= e.ci_high) ? '1' : '0');
      } else {
        f << "NA";
      }
      f << '\n';
    }
  }
  f.flush();
  if (!f) throw std::runtime_error("failed while writing " + path);
}

void write_summary_json(const StudyResult& study, const std::string& path) {
  using ordered_json = nlohmann::ordered_json;
  ordered_json j;
  j["model"] = to_string(study.spec.model);
  j["rho"] = study.spec.rho;
  j["n"] = study.spec.n;
  j["reps"] = study.reps;
  j["seed"] = study.spec.seed;
  j["alpha"] = study.config.alpha;
  j["oracle"] = study.config.regressor.kind == RegressorKind::oracle;
  j["coverage_study"] = study.coverage_study;
  j["features"] = study.features;
  j["means"] = study.mean_estimate;
  j["sds"] = study.sd_estimate;
  j["theoretical"] = study.truth ? ordered_json(*study.truth) : ordered_json(nullptr);
  j["coverage"] = study.coverage ? ordered_json(*study.coverage) : ordered_json(nullptr);
  j["null_coverage_average"] = study.null_coverage_average
                                   ? ordered_json(*study.null_coverage_average)
                                   : ordered_json(nullptr);
  j["total_mean"] = mean(study.totals);
  j["total_sd"] = study.reps > 1 ? sample_sd(study.totals) : 0.0;
  j["total_theoretical"] =
      study.total_truth ? ordered_json(*study.total_truth) : ordered_json(nullptr);

  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << j.dump(2) << "\n";
  f.flush();
  if (!f) throw std::runtime_error("failed while writing " + path);
}

}  // namespace dfi
