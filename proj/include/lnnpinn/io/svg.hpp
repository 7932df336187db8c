#pragma once

#include <string>
#include <vector>

namespace lnnpinn::io {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  std::string color = "#1f77b4";
  bool markers = false;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
  std::vector<std::string> notes;  // printed in the upper right corner
};

/// Field sampled on a regular nx-by-ny grid, row-major with x fastest.
/// NaN entries are masked out and left blank.
struct Heatmap {
  std::string title;
  int nx = 0;
  int ny = 0;
  double x_lo = 0.0;
  double x_hi = 1.0;
  double y_lo = 0.0;
  double y_hi = 1.0;
  std::vector<double> values;
};

/// Self-contained SVG documents.  Coordinates are printed with at most six
/// decimals so the output is stable across runs.
std::string render(const LinePlot& plot);
std::string render(const Heatmap& map);

/// Fixed-point text with at most six decimals and no trailing zeros.
std::string svg_number(double v);

}  // namespace lnnpinn::io
