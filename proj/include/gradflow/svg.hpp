#pragma once

#include <string>
#include <vector>

namespace gradflow {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  std::string dash;  // SVG stroke-dasharray, empty for solid
};

struct PlotSpec {
  std::string title;
  std::string x_label = "t";
  std::string y_label;
  bool log_y = false;
  int width = 720;
  int height = 460;
};

// Self-contained SVG document. On a log axis non-positive samples are
// dropped and split the polyline. Throws std::invalid_argument when no
// series has a drawable point.
std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series);

// Tab10-style colour for the i-th curve family.
std::string palette_color(std::size_t i);

}  // namespace gradflow
