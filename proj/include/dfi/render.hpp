#pragma once

#include <string>
#include <vector>

namespace dfi {

// Shortest decimal string that parses back to the same double.
std::string format_double(double v);

struct BarChartInput {
  std::string title;
  std::vector<std::string> names;
  std::vector<double> values;
  std::vector<double> error_bars;  // half-widths, same length as values
};

// 800x500 chart with one rect.bar and one path.errbar per entry. Negative
// values are clamped to the baseline in the drawing only; labels keep the
// signed numbers.
std::string render_bar_chart_svg(const BarChartInput& in);

struct TableRow {
  std::string name;
  double estimate = 0.0;
  double se = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  bool has_zp = false;
  double z = 0.0;
  double p = 0.0;
};

// name,estimate,se,ci_lo,ci_hi,z,p header; rows without z/p leave those
// cells empty.
std::string render_table_csv(const std::vector<TableRow>& rows);

}  // namespace dfi
