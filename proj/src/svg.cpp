#include "tshape/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>

namespace tshape {

namespace {

std::string fixed(double v, int digits = 2) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string ramp(double t) {
  // dark blue -> teal -> yellow
  constexpr std::array<std::array<double, 3>, 3> stops{{{68, 1, 84}, {33, 145, 140}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * 2.0;
  const auto i = std::min<std::size_t>(1, static_cast<std::size_t>(t));
  const double f = t - static_cast<double>(i);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

}  // namespace

std::string heatmap_svg(const RowMatrix& m, const std::string& title) {
  const double cell = std::max(4.0, 480.0 / static_cast<double>(std::max<Eigen::Index>({m.rows(), m.cols(), 1})));
  const double top = 40, left = 20;
  const double width = left * 2 + cell * static_cast<double>(m.cols());
  const double height = top + 40 + cell * static_cast<double>(m.rows());
  const double lo = m.size() ? m.minCoeff() : 0.0, hi = m.size() ? m.maxCoeff() : 1.0;
  const double span = hi > lo ? hi - lo : 1.0;

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(width) + "\" height=\"" +
                  fixed(height) + "\">\n";
  s += "<text x=\"" + fixed(left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      s += "<rect x=\"" + fixed(left + cell * static_cast<double>(j)) + "\" y=\"" +
           fixed(top + cell * static_cast<double>(i)) + "\" width=\"" + fixed(cell) + "\" height=\"" + fixed(cell) +
           "\" fill=\"" + ramp((m(i, j) - lo) / span) + "\"><title>" + std::to_string(i) + "," + std::to_string(j) +
           ": " + fixed(m(i, j), 6) + "</title></rect>\n";
  s += "<text x=\"" + fixed(left) + "\" y=\"" + fixed(height - 12) +
       "\" font-family=\"sans-serif\" font-size=\"11\">min " + fixed(lo, 6) + "  max " + fixed(hi, 6) + "</text>\n";
  s += "</svg>\n";
  return s;
}

std::string line_plot_svg(std::span<const LineSeries> series, const std::string& title) {
  const double w = 720, h = 300, left = 50, right = 20, top = 40, bottom = 30;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  std::size_t n = 0;
  for (const auto& ls : series) {
    n = std::max(n, ls.y.size());
    for (double v : ls.y) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!(hi > lo)) {
    lo = std::isfinite(lo) ? lo - 1.0 : 0.0;
    hi = lo + 2.0;
  }
  const double xs = n > 1 ? (w - left - right) / static_cast<double>(n - 1) : 0.0;
  const double ys = (h - top - bottom) / (hi - lo);

  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + fixed(w) + "\" height=\"" + fixed(h) + "\">\n";
  s += "<text x=\"" + fixed(left) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"14\">" + escape(title) +
       "</text>\n";
  s += "<rect x=\"" + fixed(left) + "\" y=\"" + fixed(top) + "\" width=\"" + fixed(w - left - right) + "\" height=\"" +
       fixed(h - top - bottom) + "\" fill=\"none\" stroke=\"#999\"/>\n";
  s += "<text x=\"4\" y=\"" + fixed(top + 10) + "\" font-family=\"sans-serif\" font-size=\"10\">" + fixed(hi, 3) +
       "</text>\n<text x=\"4\" y=\"" + fixed(h - bottom) + "\" font-family=\"sans-serif\" font-size=\"10\">" +
       fixed(lo, 3) + "</text>\n";
  double legend_x = left + 200;
  for (const auto& ls : series) {
    s += "<polyline fill=\"none\" stroke=\"" + ls.color + "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < ls.y.size(); ++i) {
      if (i) s += ' ';
      s += fixed(left + xs * static_cast<double>(i)) + "," + fixed(h - bottom - (ls.y[i] - lo) * ys);
    }
    s += "\"/>\n";
    s += "<text x=\"" + fixed(legend_x) + "\" y=\"24\" font-family=\"sans-serif\" font-size=\"12\" fill=\"" +
         ls.color + "\">" + escape(ls.name) + "</text>\n";
    legend_x += 120;
  }
  s += "</svg>\n";
  return s;
}

}  // namespace tshape
