#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace causal {

// Small deterministic SVG writer for the workbench plots (curves with error
// bands, bar charts, heatmaps). No timestamps or random ids, so identical
// inputs produce byte-identical files.

namespace svg {

inline std::string num(double v) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

struct Canvas {
  double width, height;
  std::ostringstream body;

  Canvas(double w, double h) : width(w), height(h) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double stroke_width = 1.0) {
    body << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
         << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(stroke_width) << "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double stroke_width = 1.5) {
    if (pts.empty()) return;
    body << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\""
         << num(stroke_width) << "\" points=\"";
    for (auto [x, y] : pts) body << num(x) << "," << num(y) << " ";
    body << "\"/>\n";
  }

  void polygon(const std::vector<std::pair<double, double>>& pts, const std::string& fill,
               double opacity = 0.25) {
    if (pts.empty()) return;
    body << "<polygon fill=\"" << fill << "\" fill-opacity=\"" << num(opacity)
         << "\" stroke=\"none\" points=\"";
    for (auto [x, y] : pts) body << num(x) << "," << num(y) << " ";
    body << "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill) {
    body << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
         << "\" height=\"" << num(h) << "\" fill=\"" << fill << "\"/>\n";
  }

  void text(double x, double y, const std::string& s, int size = 11,
            const std::string& anchor = "start") {
    body << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-size=\"" << size
         << "\" font-family=\"sans-serif\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }

  void save(const std::string& path) const {
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write svg: " + path);
    f << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << body.str() << "</svg>\n";
  }
};

// Linear data-to-pixel mapping over a plot rectangle.
struct Scale {
  double lo = 0.0, hi = 1.0, px0 = 0.0, px1 = 1.0;
  double operator()(double v) const {
    const double t = hi == lo ? 0.5 : (v - lo) / (hi - lo);
    return px0 + t * (px1 - px0);
  }
};

inline std::string heat_color(double t) {
  // white -> blue ramp
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(255.0 * (1.0 - t)));
  const int g = static_cast<int>(std::lround(255.0 * (1.0 - 0.55 * t)));
  char buf[16];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, 255);
  return buf;
}

}  // namespace svg

}  // namespace causal
