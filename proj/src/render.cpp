#include "dfi/render.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace dfi {

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

namespace {

std::string short_number(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&':
        out += "&amp;";
        break;
      case '<':
        out += "&lt;";
        break;
      case '>':
        out += "&gt;";
        break;
      case '"':
        out += "&quot;";
        break;
      default:
        out += c;
    }
  }
  return out;
}

std::string csv_cell(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

}  // namespace

std::string render_bar_chart_svg(const BarChartInput& in) {
  const std::size_t d = in.names.size();
  if (in.values.size() != d || in.error_bars.size() != d)
    throw std::invalid_argument("bar chart: input lengths differ");
  if (d == 0) throw std::invalid_argument("bar chart: nothing to draw");

  const double ml = 70.0, mr = 20.0, mt = 50.0, mb = 60.0;
  const double pw = 800.0 - ml - mr;
  const double ph = 500.0 - mt - mb;

  double ymax = 0.0;
  for (std::size_t i = 0; i < d; ++i)
    ymax = std::max({ymax, in.values[i] + in.error_bars[i], in.values[i]});
  ymax = ymax > 0.0 ? ymax * 1.05 : 1.0;

  const auto ypix = [&](double v) { return mt + ph - (v / ymax) * ph; };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"500\" "
       "viewBox=\"0 0 800 500\">\n";
  s << "<!-- dfi 0.1.0 -->\n";
  s << "<style>.bar{fill:#4878a8;}.errbar{stroke:#222222;stroke-width:1.5;fill:none;}"
       ".axis{stroke:#222222;stroke-width:1;}.grid{stroke:#dddddd;stroke-width:1;}"
       "text{font-family:sans-serif;font-size:12px;fill:#222222;}"
       ".title{font-size:16px;}</style>\n";
  s << "<text class=\"title\" x=\"400\" y=\"28\" text-anchor=\"middle\">"
    << escape_xml(in.title) << "</text>\n";

  for (int t = 0; t <= 4; ++t) {
    const double v = ymax * t / 4.0;
    const double y = ypix(v);
    if (t > 0)
      s << "<line class=\"grid\" x1=\"" << short_number(ml) << "\" y1=\""
        << short_number(y) << "\" x2=\"" << short_number(ml + pw) << "\" y2=\""
        << short_number(y) << "\"/>\n";
    s << "<text x=\"" << short_number(ml - 8.0) << "\" y=\"" << short_number(y + 4.0)
      << "\" text-anchor=\"end\">" << short_number(v) << "</text>\n";
  }
  s << "<line class=\"axis\" x1=\"" << short_number(ml) << "\" y1=\"" << short_number(mt)
    << "\" x2=\"" << short_number(ml) << "\" y2=\"" << short_number(mt + ph) << "\"/>\n";
  s << "<line class=\"axis\" x1=\"" << short_number(ml) << "\" y1=\""
    << short_number(mt + ph) << "\" x2=\"" << short_number(ml + pw) << "\" y2=\""
    << short_number(mt + ph) << "\"/>\n";

  const double slot = pw / static_cast<double>(d);
  const double bw = slot * 0.6;
  for (std::size_t i = 0; i < d; ++i) {
    const double clamped = std::max(0.0, in.values[i]);
    const double x = ml + slot * static_cast<double>(i) + (slot - bw) / 2.0;
    const double ytop = ypix(clamped);
    const double h = mt + ph - ytop;
    const double cx = ml + slot * (static_cast<double>(i) + 0.5);
    const double lo = std::max(0.0, in.values[i] - in.error_bars[i]);
    const double hi = std::max(0.0, in.values[i] + in.error_bars[i]);
    const double ylo = ypix(lo);
    const double yhi = ypix(hi);
    s << "<rect class=\"bar\" x=\"" << short_number(x) << "\" y=\"" << short_number(ytop)
      << "\" width=\"" << short_number(bw) << "\" height=\"" << short_number(h)
      << "\"/>\n";
    s << "<path class=\"errbar\" d=\"M" << short_number(cx) << " " << short_number(ylo)
      << " L" << short_number(cx) << " " << short_number(yhi) << " M"
      << short_number(cx - 5.0) << " " << short_number(ylo) << " L"
      << short_number(cx + 5.0) << " " << short_number(ylo) << " M"
      << short_number(cx - 5.0) << " " << short_number(yhi) << " L"
      << short_number(cx + 5.0) << " " << short_number(yhi) << "\"/>\n";
    s << "<text x=\"" << short_number(cx) << "\" y=\"" << short_number(mt + ph + 18.0)
      << "\" text-anchor=\"middle\">" << escape_xml(in.names[i]) << "</text>\n";
    s << "<text x=\"" << short_number(cx) << "\" y=\"" << short_number(mt + ph + 36.0)
      << "\" text-anchor=\"middle\">" << short_number(in.values[i]) << "</text>\n";
  }
  s << "</svg>\n";
  return s.str();
}

std::string render_table_csv(const std::vector<TableRow>& rows) {
  std::string out = "name,estimate,se,ci_lo,ci_hi,z,p\n";
  for (const auto& r : rows) {
    out += csv_cell(r.name);
    out += ',';
    out += format_double(r.estimate);
    out += ',';
    out += format_double(r.se);
    out += ',';
    out += format_double(r.ci_lo);
    out += ',';
    out += format_double(r.ci_hi);
    out += ',';
    if (r.has_zp) out += format_double(r.z);
    out += ',';
    if (r.has_zp) out += format_double(r.p);
    out += '\n';
  }
  return out;
}

}  // namespace dfi
