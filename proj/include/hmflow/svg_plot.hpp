#pragma once

#include <string>
#include <vector>

namespace hmflow {

struct PlotSeries {
    std::string label;
    std::vector<double> x;
    std::vector<double> y;
};

/// Minimal standalone SVG line chart; non-positive values are dropped on a log axis.
std::string line_plot_svg(const std::string& title, const std::string& x_label, const std::string& y_label,
                          const std::vector<PlotSeries>& series, bool log_y);

}  // namespace hmflow
