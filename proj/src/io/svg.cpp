#include "lnnpinn/io/svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace lnnpinn::io {

namespace {

constexpr double kWidth = 640.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 20.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;
  double pixel_lo = 0.0;
  double pixel_hi = 1.0;

  [[nodiscard]] double map(double v) const {
    const double t = log ? (std::log10(v) - lo) / (hi - lo) : (v - lo) / (hi - lo);
    return pixel_lo + t * (pixel_hi - pixel_lo);
  }
};

Axis make_axis(const std::vector<Series>& series, bool use_x, bool log, double pixel_lo, double pixel_hi) {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const auto& s : series) {
    for (double v : use_x ? s.x : s.y) {
      if (!std::isfinite(v) || (log && v <= 0.0)) {
        continue;
      }
      const double w = log ? std::log10(v) : v;
      lo = std::min(lo, w);
      hi = std::max(hi, w);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  if (hi - lo < 1e-12) {
    lo -= 0.5;
    hi += 0.5;
  }
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
  } else {
    const double pad = 0.05 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log, pixel_lo, pixel_hi};
}

std::string tick_label(double v, bool log) {
  if (log) {
    return "1e" + std::to_string(static_cast<int>(std::lround(v)));
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::array<int, 3> viridis(double t) {
  static constexpr std::array<std::array<double, 3>, 5> kStops{{{68, 1, 84}, {59, 82, 139}, {33, 145, 140},
                                                                {94, 201, 98}, {253, 231, 37}}};
  t = std::clamp(t, 0.0, 1.0) * (kStops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(t), kStops.size() - 2);
  const double f = t - static_cast<double>(i);
  std::array<int, 3> rgb{};
  for (int c = 0; c < 3; ++c) {
    rgb[c] = static_cast<int>(std::lround(kStops[i][c] + f * (kStops[i + 1][c] - kStops[i][c])));
  }
  return rgb;
}

std::string hex_color(const std::array<int, 3>& rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

void open_document(std::ostringstream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << escape(title)
     << "</text>\n";
}

}  // namespace

std::string svg_number(double v) {
  if (!std::isfinite(v)) {
    throw std::invalid_argument("non-finite SVG coordinate");
  }
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  std::string s = buf;
  s.erase(s.find_last_not_of('0') + 1);
  if (s.back() == '.') {
    s.pop_back();
  }
  if (s == "-0") {
    s = "0";
  }
  return s;
}

std::string render(const LinePlot& plot) {
  const Axis ax = make_axis(plot.series, true, plot.log_x, kLeft, kWidth - kRight);
  const Axis ay = make_axis(plot.series, false, plot.log_y, kHeight - kBottom, kTop);
  std::ostringstream os;
  open_document(os, plot.title);
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << kWidth - kLeft - kRight << "\" height=\""
     << kHeight - kTop - kBottom << "\" fill=\"none\" stroke=\"black\"/>\n";

  const int x_ticks = plot.log_x ? static_cast<int>(ax.hi - ax.lo) : 5;
  const int y_ticks = plot.log_y ? static_cast<int>(ay.hi - ay.lo) : 5;
  for (int i = 0; i <= x_ticks; ++i) {
    const double v = ax.lo + (ax.hi - ax.lo) * i / x_ticks;
    const double px = ax.pixel_lo + (ax.pixel_hi - ax.pixel_lo) * i / x_ticks;
    os << "<text x=\"" << svg_number(px) << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
       << tick_label(v, plot.log_x) << "</text>\n";
  }
  for (int i = 0; i <= y_ticks; ++i) {
    const double v = ay.lo + (ay.hi - ay.lo) * i / y_ticks;
    const double py = ay.pixel_lo + (ay.pixel_hi - ay.pixel_lo) * i / y_ticks;
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << svg_number(py + 4) << "\" text-anchor=\"end\">"
       << tick_label(v, plot.log_y) << "</text>\n";
    os << "<line x1=\"" << kLeft << "\" x2=\"" << kWidth - kRight << "\" y1=\"" << svg_number(py) << "\" y2=\""
       << svg_number(py) << "\" stroke=\"#dddddd\"/>\n";
  }
  os << "<text x=\"" << (kLeft + kWidth - kRight) / 2 << "\" y=\"" << kHeight - 18
     << "\" text-anchor=\"middle\">" << escape(plot.x_label) << "</text>\n";
  os << "<text x=\"18\" y=\"" << (kTop + kHeight - kBottom) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 "
     << (kTop + kHeight - kBottom) / 2 << ")\">" << escape(plot.y_label) << "</text>\n";

  double legend_y = kTop + 16;
  for (const auto& s : plot.series) {
    if (s.x.size() != s.y.size()) {
      throw std::invalid_argument("series '" + s.label + "' has mismatched x/y lengths");
    }
    std::string path;
    bool pen_down = false;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const bool ok = std::isfinite(s.x[i]) && std::isfinite(s.y[i]) && (!plot.log_x || s.x[i] > 0.0) &&
                      (!plot.log_y || s.y[i] > 0.0);
      if (!ok) {
        pen_down = false;
        continue;
      }
      path += (pen_down ? " L" : " M") + svg_number(ax.map(s.x[i])) + ' ' + svg_number(ay.map(s.y[i]));
      pen_down = true;
      if (s.markers) {
        os << "<circle cx=\"" << svg_number(ax.map(s.x[i])) << "\" cy=\"" << svg_number(ay.map(s.y[i]))
           << "\" r=\"4\" fill=\"" << s.color << "\"/>\n";
      }
    }
    if (!path.empty()) {
      os << "<path d=\"" << path.substr(1) << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\"/>\n";
    }
    os << "<line x1=\"" << kLeft + 10 << "\" x2=\"" << kLeft + 30 << "\" y1=\"" << legend_y << "\" y2=\"" << legend_y
       << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << kLeft + 36 << "\" y=\"" << legend_y + 4 << "\">" << escape(s.label) << "</text>\n";
    legend_y += 16;
  }
  double note_y = kTop + 16;
  for (const auto& n : plot.notes) {
    os << "<text x=\"" << kWidth - kRight - 8 << "\" y=\"" << note_y << "\" text-anchor=\"end\">" << escape(n)
       << "</text>\n";
    note_y += 16;
  }
  os << "</svg>\n";
  return os.str();
}

std::string render(const Heatmap& map) {
  if (map.nx < 1 || map.ny < 1 || map.values.size() != static_cast<std::size_t>(map.nx) * map.ny) {
    throw std::invalid_argument("heatmap size does not match its grid");
  }
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (double v : map.values) {
    if (std::isfinite(v)) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  }
  if (!std::isfinite(lo)) {
    lo = 0.0;
    hi = 1.0;
  }
  const double span = hi > lo ? hi - lo : 1.0;

  const double plot_w = kWidth - kLeft - kRight - 80.0;
  const double plot_h = kHeight - kTop - kBottom;
  const double side = std::min(plot_w, plot_h);
  const double cw = side / map.nx;
  const double ch = side / map.ny;
  std::ostringstream os;
  open_document(os, map.title);
  for (int j = 0; j < map.ny; ++j) {
    for (int i = 0; i < map.nx; ++i) {
      const double v = map.values[static_cast<std::size_t>(j) * map.nx + i];
      if (!std::isfinite(v)) {
        continue;
      }
      // Row j = 0 is the bottom edge.
      os << "<rect x=\"" << svg_number(kLeft + i * cw) << "\" y=\"" << svg_number(kTop + (map.ny - 1 - j) * ch)
         << "\" width=\"" << svg_number(cw + 0.05) << "\" height=\"" << svg_number(ch + 0.05) << "\" fill=\""
         << hex_color(viridis((v - lo) / span)) << "\"/>\n";
    }
  }
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << svg_number(side) << "\" height=\""
     << svg_number(side) << "\" fill=\"none\" stroke=\"black\"/>\n";
  char buf[32];
  for (const auto& [v, px, anchor] : {std::tuple{map.x_lo, kLeft, "start"}, std::tuple{map.x_hi, kLeft + side, "end"}}) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    os << "<text x=\"" << svg_number(px) << "\" y=\"" << svg_number(kTop + side + 16) << "\" text-anchor=\"" << anchor
       << "\">" << buf << "</text>\n";
  }
  for (const auto& [v, py] : {std::pair{map.y_lo, kTop + side}, std::pair{map.y_hi, kTop + 10.0}}) {
    std::snprintf(buf, sizeof buf, "%.3g", v);
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << svg_number(py) << "\" text-anchor=\"end\">" << buf << "</text>\n";
  }

  const double bar_x = kLeft + side + 30.0;
  constexpr int kSteps = 32;
  for (int s = 0; s < kSteps; ++s) {
    const double y = kTop + side * (kSteps - 1 - s) / kSteps;
    os << "<rect x=\"" << svg_number(bar_x) << "\" y=\"" << svg_number(y) << "\" width=\"16\" height=\""
       << svg_number(side / kSteps + 0.05) << "\" fill=\"" << hex_color(viridis((s + 0.5) / kSteps)) << "\"/>\n";
  }
  std::snprintf(buf, sizeof buf, "%.4g", hi);
  os << "<text x=\"" << svg_number(bar_x + 20) << "\" y=\"" << kTop + 10 << "\">" << buf << "</text>\n";
  std::snprintf(buf, sizeof buf, "%.4g", lo);
  os << "<text x=\"" << svg_number(bar_x + 20) << "\" y=\"" << svg_number(kTop + side) << "\">" << buf << "</text>\n";
  os << "</svg>\n";
  return os.str();
}

}  // namespace lnnpinn::io
