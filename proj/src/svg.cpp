#include "dcca/svg.hpp"

#include "dcca/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace dcca::svg {

namespace {

constexpr double kW = 640, kH = 400, kLeft = 70, kRight = 150, kTop = 40, kBottom = 60;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

struct Range {
  double lo, hi;
  double map(double v, double a, double b) const { return a + (v - lo) / (hi - lo) * (b - a); }
};

Range y_range(const std::vector<Series>& series, bool include_zero) {
  double lo = include_zero ? 0.0 : std::numeric_limits<double>::infinity();
  double hi = include_zero ? 0.0 : -std::numeric_limits<double>::infinity();
  for (const auto& s : series)
    for (double v : s.values)
      if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
  if (hi - lo < 1e-12) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  return {include_zero && lo >= 0.0 ? lo : lo - pad, hi + pad};
}

void frame(std::ostringstream& o, const std::string& title, const Range& y, const std::string& y_label) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">" << esc(title) << "</text>\n";
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x1 << "\" y2=\"" << y0 << "\" stroke=\"black\"/>\n";
  o << "<line x1=\"" << x0 << "\" y1=\"" << y0 << "\" x2=\"" << x0 << "\" y2=\"" << y1 << "\" stroke=\"black\"/>\n";
  for (int t = 0; t <= 5; ++t) {
    const double v = y.lo + (y.hi - y.lo) * t / 5.0;
    const double py = y.map(v, y0, y1);
    o << "<line x1=\"" << x0 - 4 << "\" y1=\"" << py << "\" x2=\"" << x0 << "\" y2=\"" << py << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << x0 - 7 << "\" y=\"" << py + 4 << "\" text-anchor=\"end\">" << num(v) << "</text>\n";
  }
  o << "<text transform=\"translate(16," << (y0 + y1) / 2 << ") rotate(-90)\" text-anchor=\"middle\">" << esc(y_label) << "</text>\n";
}

void legend(std::ostringstream& o, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double y = kTop + 10 + 18.0 * static_cast<double>(i);
    o << "<rect x=\"" << kW - kRight + 15 << "\" y=\"" << y - 9 << "\" width=\"12\" height=\"12\" fill=\"" << kColors[i % 6] << "\"/>\n";
    o << "<text x=\"" << kW - kRight + 32 << "\" y=\"" << y + 1 << "\">" << esc(series[i].name) << "</text>\n";
  }
}

}  // namespace

std::string bar_chart(const std::string& title, const std::vector<std::string>& categories,
                      const std::vector<Series>& series, const std::string& y_label) {
  require(!categories.empty() && !series.empty(), ErrorKind::config, "bar chart needs data");
  for (const auto& s : series)
    require(s.values.size() == categories.size(), ErrorKind::shape, "bar series '" + s.name + "' does not match the categories");
  std::ostringstream o;
  const Range y = y_range(series, true);
  frame(o, title, y, y_label);
  const double x0 = kLeft, x1 = kW - kRight, y0 = kH - kBottom, y1 = kTop;
  const double group = (x1 - x0) / static_cast<double>(categories.size());
  const double bar = 0.8 * group / static_cast<double>(series.size());
  const double zero = y.map(std::max(0.0, y.lo), y0, y1);
  for (std::size_t c = 0; c < categories.size(); ++c) {
    const double gx = x0 + group * static_cast<double>(c) + 0.1 * group;
    for (std::size_t s = 0; s < series.size(); ++s) {
      const double v = series[s].values[c];
      if (!std::isfinite(v)) continue;
      const double py = y.map(v, y0, y1);
      o << "<rect x=\"" << gx + bar * static_cast<double>(s) << "\" y=\"" << std::min(py, zero) << "\" width=\"" << bar
        << "\" height=\"" << std::abs(zero - py) << "\" fill=\"" << kColors[s % 6] << "\"/>\n";
    }
    o << "<text x=\"" << gx + 0.4 * group << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << esc(categories[c]) << "</text>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

std::string line_plot(const std::string& title, const std::vector<double>& x, const std::vector<Series>& series,
                      const std::string& x_label, const std::string& y_label) {
  require(!x.empty() && !series.empty(), ErrorKind::config, "line plot needs data");
  for (const auto& s : series)
    require(s.values.size() == x.size(), ErrorKind::shape, "line series '" + s.name + "' does not match x");
  std::ostringstream o;
  const Range y = y_range(series, false);
  Range xr{*std::min_element(x.begin(), x.end()), *std::max_element(x.begin(), x.end())};
  if (xr.hi - xr.lo < 1e-12) xr.lo -= 0.5, xr.hi += 0.5;
  frame(o, title, y, y_label);
  const double x0 = kLeft + 10, x1 = kW - kRight - 10, y0 = kH - kBottom, y1 = kTop;
  for (double v : x)
    o << "<text x=\"" << xr.map(v, x0, x1) << "\" y=\"" << y0 + 16 << "\" text-anchor=\"middle\">" << num(v) << "</text>\n";
  o << "<text x=\"" << (x0 + x1) / 2 << "\" y=\"" << kH - 18 << "\" text-anchor=\"middle\">" << esc(x_label) << "</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    std::string pts;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double v = series[s].values[i];
      if (!std::isfinite(v)) continue;
      const double px = xr.map(x[i], x0, x1), py = y.map(v, y0, y1);
      pts += num(px) + "," + num(py) + " ";
      o << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\"" << kColors[s % 6] << "\"/>\n";
    }
    o << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << kColors[s % 6] << "\" stroke-width=\"1.5\"/>\n";
  }
  legend(o, series);
  o << "</svg>\n";
  return o.str();
}

}  // namespace dcca::svg
