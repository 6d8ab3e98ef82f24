#include "nuisblue/svgplot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace nuisblue {

namespace {

const char* kPalette[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                          "#9467bd", "#8c564b", "#17becf", "#7f7f7f",
                          "#bcbd22", "#e377c2", "#393b79", "#637939"};
constexpr int kPaletteSize = 12;

constexpr double kWidth = 880.0;
constexpr double kHeight = 560.0;
constexpr double kLeft = 72.0;
constexpr double kRight = kWidth - 232.0;  // legend lives to the right
constexpr double kTop = 44.0;
constexpr double kBottom = kHeight - 58.0;

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') {
      out += "&amp;";
    } else if (c == '<') {
      out += "&lt;";
    } else if (c == '>') {
      out += "&gt;";
    } else {
      out.push_back(c);
    }
  }
  return out;
}

struct LogRange {
  double lo = 0.0;
  double hi = 1.0;

  double map(double value, double out_lo, double out_hi) const {
    const double t = (std::log10(value) - lo) / (hi - lo);
    return out_lo + t * (out_hi - out_lo);
  }
};

LogRange fit_range(std::vector<double> logs) {
  LogRange r;
  if (logs.empty()) return r;
  const auto [mn, mx] = std::minmax_element(logs.begin(), logs.end());
  r.lo = *mn;
  r.hi = *mx;
  if (r.hi - r.lo < 1e-9) {
    r.lo -= 0.5;
    r.hi += 0.5;
  }
  const double pad = 0.04 * (r.hi - r.lo);
  r.lo -= pad;
  r.hi += pad;
  return r;
}

void decade_ticks(std::ostringstream& svg, const LogRange& range, bool x_axis) {
  const int first = static_cast<int>(std::ceil(range.lo - 1e-9));
  const int last = static_cast<int>(std::floor(range.hi + 1e-9));
  for (int k = first; k <= last; ++k) {
    const double v = std::pow(10.0, k);
    if (x_axis) {
      const double px = range.map(v, kLeft, kRight);
      svg << "<line x1=\"" << fmt2(px) << "\" y1=\"" << fmt2(kTop)
          << "\" x2=\"" << fmt2(px) << "\" y2=\"" << fmt2(kBottom)
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << fmt2(px) << "\" y=\"" << fmt2(kBottom + 20.0)
          << "\" font-size=\"12\" text-anchor=\"middle\">10<tspan dy=\"-5\" "
             "font-size=\"9\">"
          << k << "</tspan></text>\n";
    } else {
      const double py = range.map(v, kBottom, kTop);
      svg << "<line x1=\"" << fmt2(kLeft) << "\" y1=\"" << fmt2(py)
          << "\" x2=\"" << fmt2(kRight) << "\" y2=\"" << fmt2(py)
          << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
      svg << "<text x=\"" << fmt2(kLeft - 8.0) << "\" y=\"" << fmt2(py + 4.0)
          << "\" font-size=\"12\" text-anchor=\"end\">10<tspan dy=\"-5\" "
             "font-size=\"9\">"
          << k << "</tspan></text>\n";
    }
  }
}

}  // namespace

std::string svg_loglog(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<PlotSeries>& series) {
  std::vector<double> log_x;
  std::vector<double> log_y;
  for (const PlotSeries& s : series) {
    const std::size_t count = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < count; ++i) {
      if (s.x[i] > 0.0 && s.y[i] > 0.0 && std::isfinite(s.x[i]) &&
          std::isfinite(s.y[i])) {
        log_x.push_back(std::log10(s.x[i]));
        log_y.push_back(std::log10(s.y[i]));
      }
    }
  }
  const LogRange rx = fit_range(log_x);
  const LogRange ry = fit_range(log_y);

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" fill=\"#ffffff\"/>\n";
  svg << "<text x=\"" << fmt2((kLeft + kRight) / 2.0)
      << "\" y=\"24\" font-size=\"16\" text-anchor=\"middle\">"
      << escape(title) << "</text>\n";

  decade_ticks(svg, rx, true);
  decade_ticks(svg, ry, false);
  svg << "<rect x=\"" << fmt2(kLeft) << "\" y=\"" << fmt2(kTop)
      << "\" width=\"" << fmt2(kRight - kLeft) << "\" height=\""
      << fmt2(kBottom - kTop)
      << "\" fill=\"none\" stroke=\"#333333\" stroke-width=\"1\"/>\n";

  svg << "<text x=\"" << fmt2((kLeft + kRight) / 2.0) << "\" y=\""
      << fmt2(kHeight - 14.0) << "\" font-size=\"13\" text-anchor=\"middle\">"
      << escape(x_label) << "</text>\n";
  svg << "<text x=\"20\" y=\"" << fmt2((kTop + kBottom) / 2.0)
      << "\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 "
         "20 "
      << fmt2((kTop + kBottom) / 2.0) << ")\">" << escape(y_label)
      << "</text>\n";

  int color_idx = 0;
  double legend_y = kTop + 10.0;
  for (const PlotSeries& s : series) {
    const std::string color = kPalette[color_idx % kPaletteSize];
    ++color_idx;

    std::ostringstream points;
    std::ostringstream markers;
    const std::size_t count = std::min(s.x.size(), s.y.size());
    for (std::size_t i = 0; i < count; ++i) {
      if (!(s.x[i] > 0.0 && s.y[i] > 0.0) || !std::isfinite(s.x[i]) ||
          !std::isfinite(s.y[i])) {
        continue;
      }
      const double px = rx.map(s.x[i], kLeft, kRight);
      const double py = ry.map(s.y[i], kBottom, kTop);
      points << fmt2(px) << ',' << fmt2(py) << ' ';
      if (!s.dashed) {
        markers << "<circle cx=\"" << fmt2(px) << "\" cy=\"" << fmt2(py)
                << "\" r=\"3\" fill=\"" << color << "\"/>\n";
      }
    }
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.6\"";
    if (s.dashed) svg << " stroke-dasharray=\"7 4\"";
    svg << " points=\"" << points.str() << "\"/>\n";
    svg << markers.str();

    const double lx = kRight + 14.0;
    svg << "<line x1=\"" << fmt2(lx) << "\" y1=\"" << fmt2(legend_y)
        << "\" x2=\"" << fmt2(lx + 26.0) << "\" y2=\"" << fmt2(legend_y)
        << "\" stroke=\"" << color << "\" stroke-width=\"1.6\"";
    if (s.dashed) svg << " stroke-dasharray=\"7 4\"";
    svg << "/>\n";
    svg << "<text x=\"" << fmt2(lx + 32.0) << "\" y=\"" << fmt2(legend_y + 4.0)
        << "\" font-size=\"11\">" << escape(s.name) << "</text>\n";
    legend_y += 18.0;
  }

  svg << "</svg>\n";
  return svg.str();
}

}  // namespace nuisblue
