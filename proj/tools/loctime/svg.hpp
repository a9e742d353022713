#pragma once

// Minimal static SVG line plots: axes, ticks, polylines with markers, legend.

#include <string>
#include <vector>

namespace loctime::cli {

struct PlotSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<PlotSeries> series;
};

/// Points that cannot be drawn (non-finite, or <= 0 on a log axis) are skipped.
std::string render_svg(const PlotSpec& plot);

}  // namespace loctime::cli
