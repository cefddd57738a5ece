#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dfi/baselines.hpp"
#include "dfi/core.hpp"
#include "dfi/importance.hpp"
#include "dfi/render.hpp"
#include "dfi/simulation.hpp"
#include "dfi/threading.hpp"

namespace {

using nlohmann::ordered_json;

struct AnalyzeArgs {
  std::string input, target, groups, output;
  std::string transport = "bw";
  std::string regressor = "forest";
  int folds = 2;
  int m = 50;
  int trees = 500;
  int min_leaf = 5;
  double alpha = 0.1;
  bool no_standardize = false;
  bool with_loco = false;
  bool with_cpi = false;
  std::uint64_t seed = 0;
};

struct SimulateArgs {
  std::string model, out;
  double rho = 0.0;
  std::uint64_t n = 0;
  int reps = 0;
  bool coverage = false;
  bool oracle = false;
  std::uint64_t seed = 0;
};

struct ReportArgs {
  std::string input, out;
  std::string format = "svg";
};

std::string short_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + path + " for writing");
  f << content;
  f.flush();
  if (!f) throw std::runtime_error("failed while writing " + path);
}

int run_analyze(const AnalyzeArgs& a) {
  dfi::Dataset ds = dfi::load_csv(a.input, a.target);
  const bool standardized = !a.no_standardize;
  if (standardized) ds = dfi::standardize(ds).first;

  // resolve group definitions before the estimation run so a bad groups
  // file fails in milliseconds, not after minutes of fitting
  std::vector<std::pair<std::string, std::vector<std::size_t>>> group_sets;
  if (!a.groups.empty()) {
    std::ifstream gf(a.groups, std::ios::binary);
    if (!gf) throw std::runtime_error("cannot open " + a.groups);
    ordered_json gj;
    try {
      gj = ordered_json::parse(gf);
    } catch (const nlohmann::json::parse_error& e) {
      throw std::runtime_error("malformed groups JSON: " + std::string(e.what()));
    }
    if (!gj.is_object())
      throw std::runtime_error("groups JSON must map group names to feature name lists");
    for (const auto& [gname, members] : gj.items()) {
      if (!members.is_array())
        throw std::runtime_error("group " + gname + " must be a list of feature names");
      std::vector<std::size_t> idx;
      for (const auto& member : members) {
        const std::string fname = member.get<std::string>();
        const auto it =
            std::find(ds.feature_names.begin(), ds.feature_names.end(), fname);
        if (it == ds.feature_names.end())
          throw std::runtime_error("group " + gname + " names unknown feature " + fname);
        idx.push_back(static_cast<std::size_t>(it - ds.feature_names.begin()));
      }
      group_sets.emplace_back(gname, std::move(idx));
    }
  }

  dfi::RunConfig rc;
  rc.n_folds = a.folds;
  rc.m_resamples = a.m;
  rc.alpha = a.alpha;
  rc.seed = a.seed;
  rc.transport_kind = a.transport == "bw" ? dfi::TransportKind::bures_wasserstein
                                          : dfi::TransportKind::triangular;
  rc.regressor.kind = a.regressor == "forest" ? dfi::RegressorKind::random_forest
                                              : dfi::RegressorKind::kernel_smoother;
  rc.regressor.n_trees = a.trees;
  rc.regressor.min_leaf = a.min_leaf;

  std::cerr << "analyze: input=" << a.input << " target=" << a.target << " n=" << ds.n()
            << " d=" << ds.d() << " folds=" << rc.n_folds << " m=" << rc.m_resamples
            << " alpha=" << rc.alpha << " transport=" << a.transport
            << " regressor=" << a.regressor << " trees=" << rc.regressor.n_trees
            << " min_leaf=" << rc.regressor.min_leaf
            << " standardize=" << (standardized ? "on" : "off") << " seed=" << rc.seed
            << " output=" << a.output << "\n";

  dfi::ImportanceReport report = dfi::run_dfi(ds, rc);
  report.standardized = standardized;

  const dfi::InferenceSettings settings{rc.alpha, rc.inflate_near_null};
  for (const auto& [gname, idx] : group_sets)
    report.groups.emplace_back(
        gname, dfi::group_importance(gname, report.attributed, idx, settings));

  if (a.with_loco) report.baseline_loco = dfi::loco_importance(ds, rc).estimates;
  if (a.with_cpi) report.baseline_cpi = dfi::cpi_importance(ds, rc).estimates;

  dfi::write_report(report, a.output);
  return 0;
}

int run_simulate(const SimulateArgs& s) {
  dfi::ModelSpec spec;
  spec.model = dfi::model_from_string(s.model);
  spec.rho = s.rho;
  spec.n = static_cast<std::size_t>(s.n);
  spec.seed = s.seed;

  dfi::RunConfig rc;
  rc.seed = s.seed;
  if (s.oracle) rc.regressor.kind = dfi::RegressorKind::oracle;

  std::cerr << "simulate: model=" << s.model << " rho=" << spec.rho << " n=" << spec.n
            << " reps=" << s.reps << " coverage=" << (s.coverage ? "on" : "off")
            << " oracle=" << (s.oracle ? "on" : "off") << " seed=" << spec.seed
            << " out=" << s.out << "\n";

  std::filesystem::create_directories(s.out);
  const dfi::StudyResult study = s.coverage ? dfi::coverage_study(spec, rc, s.reps)
                                            : dfi::replication_study(spec, rc, s.reps);
  dfi::write_replicates_csv(study,
                            (std::filesystem::path(s.out) / "replicates.csv").string());
  dfi::write_summary_json(study,
                          (std::filesystem::path(s.out) / "summary.json").string());
  return 0;
}

int run_report(const ReportArgs& r) {
  std::ifstream f(r.input, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open " + r.input);
  std::stringstream buf;
  buf << f.rdbuf();
  ordered_json j;
  try {
    j = ordered_json::parse(buf.str());
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error("malformed report JSON: " + std::string(e.what()));
  }

  dfi::BarChartInput chart;
  std::vector<dfi::TableRow> rows;

  if (j.contains("latent") && j.contains("attributed")) {
    const dfi::ImportanceReport rep = dfi::read_report(r.input);
    for (const auto& e : rep.attributed) {
      chart.names.push_back(e.name);
      chart.values.push_back(e.estimate);
      chart.error_bars.push_back(e.std_error);
      dfi::TableRow row;
      row.name = e.name;
      row.estimate = e.estimate;
      row.se = e.std_error;
      row.ci_lo = e.ci_low;
      row.ci_hi = e.ci_high;
      row.has_zp = true;
      row.z = e.z_score;
      row.p = e.p_value;
      rows.push_back(row);
    }
    for (const auto& [gname, e] : rep.groups) {
      dfi::TableRow row;
      row.name = gname;
      row.estimate = e.estimate;
      row.se = e.std_error;
      row.ci_lo = e.ci_low;
      row.ci_hi = e.ci_high;
      row.has_zp = true;
      row.z = e.z_score;
      row.p = e.p_value;
      rows.push_back(row);
    }
    chart.title =
        "attributed importance (total " + short_number(rep.total_attributed) + ")";
  } else if (j.contains("features") && j.contains("means")) {
    const auto features = j.at("features").get<std::vector<std::string>>();
    const auto means = j.at("means").get<std::vector<double>>();
    const auto sds = j.at("sds").get<std::vector<double>>();
    if (features.size() != means.size() || features.size() != sds.size())
      throw std::runtime_error("summary JSON arrays have mismatched lengths");
    for (std::size_t i = 0; i < features.size(); ++i) {
      chart.names.push_back(features[i]);
      chart.values.push_back(means[i]);
      chart.error_bars.push_back(sds[i]);
      dfi::TableRow row;
      row.name = features[i];
      row.estimate = means[i];
      row.se = sds[i];
      row.ci_lo = means[i] - sds[i];
      row.ci_hi = means[i] + sds[i];
      row.has_zp = false;
      rows.push_back(row);
    }
    chart.title = j.at("model").get<std::string>() + " study, " +
                  std::to_string(j.at("reps").get<int>()) + " replicates (mean total " +
                  short_number(j.at("total_mean").get<double>()) + ")";
  } else {
    throw std::runtime_error("unrecognized report file: " + r.input);
  }

  std::cerr << "report: input=" << r.input << " format=" << r.format
            << " out=" << r.out << "\n";
  if (r.format == "svg")
    write_text_file(r.out, dfi::render_bar_chart_svg(chart));
  else
    write_text_file(r.out, dfi::render_table_csv(rows));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"disentangled feature importance toolkit"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "worker threads; outputs do not depend on this")
      ->check(CLI::Range(1, 256));

  const CLI::Validator rho_range(
      [](std::string& input) -> std::string {
        try {
          std::size_t pos = 0;
          const double v = std::stod(input, &pos);
          if (pos == input.size() && v >= 0.0 && v < 1.0) return {};
        } catch (...) {
        }
        return std::string("rho must be in [0, 1): ") + input;
      },
      "FLOAT in [0,1)");
  const CLI::Validator alpha_range(
      [](std::string& input) -> std::string {
        try {
          std::size_t pos = 0;
          const double v = std::stod(input, &pos);
          if (pos == input.size() && v > 0.0 && v < 1.0) return {};
        } catch (...) {
        }
        return std::string("alpha must be in (0, 1): ") + input;
      },
      "FLOAT in (0,1)");

  AnalyzeArgs a;
  CLI::App* analyze = app.add_subcommand("analyze", "estimate importance for a CSV dataset");
  analyze->fallthrough();  // lets the global --threads appear after the subcommand
  analyze->add_option("--input", a.input, "input CSV path")->required();
  analyze->add_option("--target", a.target, "response column name")->required();
  analyze->add_option("--groups", a.groups,
                      "path to a JSON file mapping group names to feature name lists");
  analyze->add_option("--folds", a.folds, "cross-fit folds")->check(CLI::Range(2, 1000));
  analyze->add_option("--m", a.m, "resampling draws per row")->check(CLI::Range(1, 1000000));
  analyze->add_option("--alpha", a.alpha, "miscoverage level")->check(alpha_range);
  analyze->add_option("--transport", a.transport, "transport map kind")
      ->check(CLI::IsMember({"bw", "triangular"}));
  analyze->add_option("--regressor", a.regressor, "regression method")
      ->check(CLI::IsMember({"forest", "kernel"}));
  analyze->add_option("--trees", a.trees, "forest size")->check(CLI::Range(1, 100000));
  analyze->add_option("--min-leaf", a.min_leaf, "minimum observations per leaf")
      ->check(CLI::Range(1, 1000000));
  analyze->add_flag("--no-standardize", a.no_standardize,
                    "skip feature/response standardization");
  analyze->add_flag("--with-loco", a.with_loco, "also compute the LOCO baseline");
  analyze->add_flag("--with-cpi", a.with_cpi, "also compute the CPI baseline");
  analyze->add_option("--seed", a.seed, "master seed")->required();
  analyze->add_option("--output", a.output, "output report JSON path")->required();

  SimulateArgs s;
  CLI::App* simulate =
      app.add_subcommand("simulate", "run a replication or coverage study");
  simulate->fallthrough();
  simulate->add_option("--model", s.model, "data model")
      ->required()
      ->check(CLI::IsMember({"m1", "m2", "m3", "m4"}));
  simulate->add_option("--rho", s.rho, "correlation parameter")->check(rho_range);
  simulate->add_option("--n", s.n, "sample size per replicate")
      ->required()
      ->check(CLI::Range(10, 100000000));
  simulate->add_option("--reps", s.reps, "number of replicates")
      ->required()
      ->check(CLI::Range(1, 1000000));
  simulate->add_flag("--coverage", s.coverage,
                     "record CI coverage against theoretical values");
  simulate->add_flag("--oracle", s.oracle,
                     "use the model regression function and exact covariance");
  simulate->add_option("--seed", s.seed, "master seed")->required();
  simulate->add_option("--out", s.out, "output directory")->required();

  ReportArgs r;
  CLI::App* report =
      app.add_subcommand("report", "render a report or study summary to SVG or CSV");
  report->fallthrough();
  report->add_option("--input", r.input, "report or summary JSON path")->required();
  report->add_option("--format", r.format, "output format")
      ->check(CLI::IsMember({"svg", "csv"}));
  report->add_option("--out", r.out, "output file path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  dfi::set_thread_count(threads);

  try {
    if (analyze->parsed()) return run_analyze(a);
    if (simulate->parsed()) return run_simulate(s);
    if (report->parsed()) return run_report(r);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
