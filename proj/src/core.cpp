#include "dfi/core.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dfi/stats.hpp"

namespace dfi {

using ordered_json = nlohmann::ordered_json;

void Dataset::validate() const {
  if (x.rows < 1 || x.cols < 1)
    throw std::invalid_argument("dataset must have at least one row and one column");
  if (y.size() != x.rows)
    throw std::invalid_argument("response length does not match row count");
  if (feature_names.size() != x.cols)
    throw std::invalid_argument("feature name count does not match column count");
  std::set<std::string> seen;
  for (const auto& name : feature_names)
    if (!seen.insert(name).second)
      throw std::invalid_argument("duplicate feature name: " + name);
  for (double v : x.a)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite feature value");
  for (double v : y)
    if (!std::isfinite(v)) throw std::invalid_argument("non-finite response value");
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.push_back("");
  return cells;
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_cell(const std::string& raw, std::size_t data_row,
                  const std::string& column) {
  std::string cell = trim(raw);
  auto fail = [&](const std::string& why) {
    throw std::runtime_error("row " + std::to_string(data_row) + ", column \"" +
                             column + "\": " + why + " (\"" + cell + "\")");
  };
  if (cell.empty()) fail("missing value");
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
  if (ec != std::errc() || ptr != cell.data() + cell.size())
    fail("not a number");
  if (!std::isfinite(value)) fail("not a finite number");
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& target) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);

  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) lines.push_back(line);
  }
  if (lines.empty()) throw std::runtime_error("empty CSV: " + path);

  std::vector<std::string> header = split_csv_line(lines[0]);
  for (auto& h : header) h = trim(h);
  std::size_t target_col = header.size();
  for (std::size_t j = 0; j < header.size(); ++j)
    if (header[j] == target) target_col = j;
  if (target_col == header.size())
    throw std::runtime_error("target column not found: " + target);
  if (lines.size() < 3)
    throw std::runtime_error("need at least 2 data rows, got " +
                             std::to_string(lines.size() - 1));

  const std::size_t n = lines.size() - 1;
  const std::size_t d = header.size() - 1;
  if (d == 0) throw std::runtime_error("no feature columns besides the target");

  Dataset ds;
  for (std::size_t j = 0; j < header.size(); ++j)
    if (j != target_col) ds.feature_names.push_back(header[j]);
  ds.x = Matrix(n, d);
  ds.y.resize(n);

  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> cells = split_csv_line(lines[i + 1]);
    if (cells.size() != header.size())
      throw std::runtime_error("row " + std::to_string(i + 1) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
    std::size_t col = 0;
    for (std::size_t j = 0; j < cells.size(); ++j) {
      double v = parse_cell(cells[j], i + 1, header[j]);
      if (j == target_col)
        ds.y[i] = v;
      else
        ds.x(i, col++) = v;
    }
  }
  ds.validate();
  return ds;
}

std::pair<Dataset, StandardizationInfo> standardize(const Dataset& ds) {
  ds.validate();
  const std::size_t n = ds.n(), d = ds.d();
  StandardizationInfo info;
  info.means.resize(d + 1);
  info.scales.resize(d + 1);

  Dataset out = ds;
  std::vector<double> column(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) column[i] = ds.x(i, j);
    double m = mean(column);
    double sd = sample_sd(column);
    if (!(sd > 0.0))
      throw std::runtime_error("column \"" + ds.feature_names[j] +
                               "\" has zero variance");
    info.means[j] = m;
    info.scales[j] = sd;
    for (std::size_t i = 0; i < n; ++i) out.x(i, j) = (ds.x(i, j) - m) / sd;
  }
  double m = mean(ds.y);
  double sd = sample_sd(ds.y);
  if (!(sd > 0.0)) throw std::runtime_error("response has zero variance");
  info.means[d] = m;
  info.scales[d] = sd;
  for (std::size_t i = 0; i < n; ++i) out.y[i] = (ds.y[i] - m) / sd;
  return {out, info};
}

const char* to_string(TransportKind k) {
  return k == TransportKind::bures_wasserstein ? "bures_wasserstein" : "triangular";
}

const char* to_string(RegressorKind k) {
  switch (k) {
    case RegressorKind::random_forest: return "random_forest";
    case RegressorKind::kernel_smoother: return "kernel_smoother";
    default: return "oracle";
  }
}

namespace {

TransportKind transport_from_string(const std::string& s) {
  if (s == "bures_wasserstein") return TransportKind::bures_wasserstein;
  if (s == "triangular") return TransportKind::triangular;
  throw std::runtime_error("unknown transport kind: " + s);
}

RegressorKind regressor_from_string(const std::string& s) {
  if (s == "random_forest") return RegressorKind::random_forest;
  if (s == "kernel_smoother") return RegressorKind::kernel_smoother;
  if (s == "oracle") return RegressorKind::oracle;
  throw std::runtime_error("unknown regressor kind: " + s);
}

ordered_json estimate_to_json(const ImportanceEstimate& e) {
  ordered_json j;
  j["name"] = e.name;
  j["estimate"] = e.estimate;
  j["se"] = e.std_error;
  j["ci"] = {e.ci_low, e.ci_high};
  j["z"] = e.z_score;
  j["p"] = e.p_value;
  j["influence"] = e.influence_values;
  return j;
}

ImportanceEstimate estimate_from_json(const ordered_json& j) {
  ImportanceEstimate e;
  e.name = j.at("name").get<std::string>();
  e.estimate = j.at("estimate").get<double>();
  e.std_error = j.at("se").get<double>();
  e.ci_low = j.at("ci").at(0).get<double>();
  e.ci_high = j.at("ci").at(1).get<double>();
  e.z_score = j.at("z").get<double>();
  e.p_value = j.at("p").get<double>();
  e.influence_values = j.at("influence").get<std::vector<double>>();
  return e;
}

ordered_json config_to_json(const RunConfig& c, bool standardized) {
  ordered_json r;
  r["n_folds"] = c.n_folds;
  r["m_resamples"] = c.m_resamples;
  r["alpha"] = c.alpha;
  r["seed"] = c.seed;
  r["transport"] = to_string(c.transport_kind);
  ordered_json reg;
  reg["kind"] = to_string(c.regressor.kind);
  reg["n_trees"] = c.regressor.n_trees;
  reg["min_leaf"] = c.regressor.min_leaf;
  reg["max_features"] = c.regressor.max_features;
  reg["bandwidth"] = c.regressor.bandwidth;
  reg["oracle_fn"] = c.regressor.oracle_fn;
  r["regressor"] = reg;
  r["inflate_near_null"] = c.inflate_near_null;
  r["standardized"] = standardized;
  return r;
}

void config_from_json(const ordered_json& j, RunConfig& c, bool& standardized) {
  c.n_folds = j.at("n_folds").get<int>();
  c.m_resamples = j.at("m_resamples").get<int>();
  c.alpha = j.at("alpha").get<double>();
  c.seed = j.at("seed").get<std::uint64_t>();
  c.transport_kind = transport_from_string(j.at("transport").get<std::string>());
  const auto& reg = j.at("regressor");
  c.regressor.kind = regressor_from_string(reg.at("kind").get<std::string>());
  c.regressor.n_trees = reg.at("n_trees").get<int>();
  c.regressor.min_leaf = reg.at("min_leaf").get<int>();
  c.regressor.max_features = reg.at("max_features").get<double>();
  c.regressor.bandwidth = reg.at("bandwidth").get<double>();
  c.regressor.oracle_fn = reg.at("oracle_fn").get<std::string>();
  c.inflate_near_null = j.at("inflate_near_null").get<bool>();
  standardized = j.at("standardized").get<bool>();
}

}  // namespace

void write_report(const ImportanceReport& report, const std::string& path) {
  ordered_json j;
  j["config"] = config_to_json(report.config, report.standardized);
  j["latent"] = ordered_json::array();
  for (const auto& e : report.latent) j["latent"].push_back(estimate_to_json(e));
  j["attributed"] = ordered_json::array();
  for (const auto& e : report.attributed) j["attributed"].push_back(estimate_to_json(e));
  j["groups"] = ordered_json::array();
  for (const auto& [name, e] : report.groups) {
    ordered_json g = estimate_to_json(e);
    g["name"] = name;
    j["groups"].push_back(g);
  }
  j["totals"] = {{"latent", report.total_latent}, {"attributed", report.total_attributed}};
  j["sigma_diag"] = report.sigma_diag;
  if (!report.baseline_loco.empty() || !report.baseline_cpi.empty()) {
    ordered_json b;
    if (!report.baseline_loco.empty()) {
      b["loco"] = ordered_json::array();
      for (const auto& e : report.baseline_loco) b["loco"].push_back(estimate_to_json(e));
    }
    if (!report.baseline_cpi.empty()) {
      b["cpi"] = ordered_json::array();
      for (const auto& e : report.baseline_cpi) b["cpi"].push_back(estimate_to_json(e));
    }
    j["baselines"] = b;
  }

  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

ImportanceReport read_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  ordered_json j;
  try {
    j = ordered_json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::runtime_error(std::string("malformed report JSON: ") + e.what());
  }

  ImportanceReport r;
  config_from_json(j.at("config"), r.config, r.standardized);
  for (const auto& e : j.at("latent")) r.latent.push_back(estimate_from_json(e));
  for (const auto& e : j.at("attributed")) r.attributed.push_back(estimate_from_json(e));
  for (const auto& g : j.at("groups"))
    r.groups.emplace_back(g.at("name").get<std::string>(), estimate_from_json(g));
  r.total_latent = j.at("totals").at("latent").get<double>();
  r.total_attributed = j.at("totals").at("attributed").get<double>();
  r.sigma_diag = j.at("sigma_diag").get<std::vector<double>>();
  if (j.contains("baselines")) {
    const auto& b = j.at("baselines");
    if (b.contains("loco"))
      for (const auto& e : b.at("loco")) r.baseline_loco.push_back(estimate_from_json(e));
    if (b.contains("cpi"))
      for (const auto& e : b.at("cpi")) r.baseline_cpi.push_back(estimate_from_json(e));
  }
  return r;
}

}  // namespace dfi
