#pragma once

#include <string>
#include <vector>

#include "feedaudit/metrics.hpp"

namespace feedaudit::metrics {

struct PlotSeries {
  std::string label;
  std::vector<Point> points;
  bool trend = true;  // draw the fitted line as a dashed overlay
};

/// Standalone SVG with one polyline per series, x = run index.
std::string line_chart_svg(const std::string& title, const std::string& y_label,
                           const std::vector<PlotSeries>& series);

/// Standalone SVG of a square heatmap; NaN cells are left blank.
std::string heatmap_svg(const std::string& title, const Heatmap& heatmap);

}  // namespace feedaudit::metrics
