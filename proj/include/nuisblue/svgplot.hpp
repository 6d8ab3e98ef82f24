#pragma once

#include <string>
#include <vector>

namespace nuisblue {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;  // reference curves (bounds) are drawn dashed
};

// Self-contained log-log SVG chart.  Non-positive samples are dropped from
// the drawing (they cannot be placed on log axes).  Output is a pure
// function of the inputs, so identical calls give identical bytes.
std::string svg_loglog(const std::string& title, const std::string& x_label,
                       const std::string& y_label,
                       const std::vector<PlotSeries>& series);

}  // namespace nuisblue
