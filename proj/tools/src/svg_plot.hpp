#pragma once

#include <string>
#include <vector>

namespace docparse::cli {

struct PlotSeries {
  std::string name;
  std::string color;  // any SVG color
  std::vector<double> values;  // y per x = 1, 2, ...
  double opacity = 1.0;
  bool in_legend = true;
};

/// Standalone SVG line chart with axes, min/max tick labels and a legend.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series);

}  // namespace docparse::cli
