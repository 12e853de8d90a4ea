#pragma once

#include <string>
#include <vector>

namespace ulo {

// One marker on the unit-disk scatter. x/y are expected in [-1, 1].
struct ScatterPoint {
  double x = 0;
  double y = 0;
  double radius_px = 2.0;
  std::string color = "#888888";
};

// Static SVG scatter over the unit disk; emits exactly one
// <circle class="marker"> per point.
void write_scatter_svg(const std::string& path, const std::string& title,
                       const std::string& x_label, const std::string& y_label,
                       const std::vector<ScatterPoint>& points);

}  // namespace ulo
