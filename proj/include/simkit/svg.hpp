#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "simkit/format.hpp"

namespace simkit::detail {

inline std::string svg_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

inline const char* series_color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};
  return palette[i % 8];
}

/// Maps a data interval onto a pixel interval (pixel y axes are flipped by
/// passing px_hi < px_lo).
struct LinearScale {
  double data_lo = 0, data_hi = 1, px_lo = 0, px_hi = 1;
  double operator()(double v) const {
    double t = (data_hi == data_lo) ? 0.5 : (v - data_lo) / (data_hi - data_lo);
    return px_lo + t * (px_hi - px_lo);
  }
};

inline std::vector<double> nice_ticks(double lo, double hi, int target = 5) {
  if (!(hi > lo)) {
    double pad = (lo == 0) ? 1.0 : std::fabs(lo) * 0.1;
    lo -= pad;
    hi += pad;
  }
  double span = hi - lo;
  double step = std::pow(10.0, std::floor(std::log10(span / target)));
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    if (span / (step * m) <= target) {
      step *= m;
      break;
    }
  }
  std::vector<double> ticks;
  double first = std::ceil(lo / step) * step;
  for (double t = first; t <= hi + 1e-9 * span; t += step) ticks.push_back(t == 0 ? 0.0 : t);
  return ticks;
}

inline std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", v);
  return buf;
}

class SvgCanvas {
 public:
  SvgCanvas(double width, double height) : w_(width), h_(height) {}

  void line(double x1, double y1, double x2, double y2, const std::string& stroke,
            double width = 1.0) {
    body_ += "<line x1=\"" + svg_num(x1) + "\" y1=\"" + svg_num(y1) + "\" x2=\"" + svg_num(x2) +
             "\" y2=\"" + svg_num(y2) + "\" stroke=\"" + stroke + "\" stroke-width=\"" +
             svg_num(width) + "\"/>\n";
  }

  void polyline(const std::vector<std::pair<double, double>>& pts, const std::string& stroke,
                double width = 1.5) {
    if (pts.size() < 2) return;
    std::string p;
    for (const auto& [x, y] : pts) p += svg_num(x) + "," + svg_num(y) + " ";
    body_ += "<polyline fill=\"none\" stroke=\"" + stroke + "\" stroke-width=\"" +
             svg_num(width) + "\" points=\"" + p + "\"/>\n";
  }

  void rect(double x, double y, double w, double h, const std::string& fill,
            const std::string& stroke = "black") {
    body_ += "<rect x=\"" + svg_num(x) + "\" y=\"" + svg_num(y) + "\" width=\"" + svg_num(w) +
             "\" height=\"" + svg_num(h) + "\" fill=\"" + fill + "\" stroke=\"" + stroke +
             "\"/>\n";
  }

  void circle(double x, double y, double r, const std::string& fill) {
    body_ += "<circle cx=\"" + svg_num(x) + "\" cy=\"" + svg_num(y) + "\" r=\"" + svg_num(r) +
             "\" fill=\"" + fill + "\"/>\n";
  }

  void text(double x, double y, const std::string& s, double size = 12,
            const std::string& anchor = "start", double rotate = 0) {
    body_ += "<text x=\"" + svg_num(x) + "\" y=\"" + svg_num(y) + "\" font-size=\"" +
             svg_num(size) + "\" font-family=\"sans-serif\" text-anchor=\"" + anchor + "\"";
    if (rotate != 0)
      body_ += " transform=\"rotate(" + svg_num(rotate) + " " + svg_num(x) + " " + svg_num(y) +
               ")\"";
    body_ += ">" + xml_escape(s) + "</text>\n";
  }

  /// Axes with ticks and numeric labels for one plot panel.
  void axes(double x0, double y0, double x1, double y1, const LinearScale& xs,
            const LinearScale& ys, const std::vector<double>& xticks,
            const std::vector<double>& yticks) {
    line(x0, y0, x1, y0, "black");  // x axis (y0 = bottom)
    line(x0, y0, x0, y1, "black");  // y axis
    for (double t : xticks) {
      double px = xs(t);
      line(px, y0, px, y0 + 4, "black");
      text(px, y0 + 16, tick_label(t), 10, "middle");
    }
    for (double t : yticks) {
      double py = ys(t);
      line(x0 - 4, py, x0, py, "black");
      text(x0 - 6, py + 3, tick_label(t), 10, "end");
    }
  }

  std::string render() const {
    return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + svg_num(w_) + "\" height=\"" +
           svg_num(h_) + "\" viewBox=\"0 0 " + svg_num(w_) + " " + svg_num(h_) + "\">\n" +
           "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n" + body_ + "</svg>\n";
  }

 private:
  double w_, h_;
  std::string body_;
};

}  // namespace simkit::detail
