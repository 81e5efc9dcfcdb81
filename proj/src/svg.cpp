#include "gradflow/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace gradflow {
namespace {

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

// Ticks at 1, 2 or 5 times a power of ten.
std::vector<double> linear_ticks(double lo, double hi) {
  const double span = hi - lo;
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0}) {
    step = m * mag;
    if (span / step <= 7.0) break;
  }
  std::vector<double> ticks;
  for (double v = std::ceil(lo / step) * step; v <= hi + 1e-9 * step; v += step) {
    ticks.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return ticks;
}

}  // namespace

std::string palette_color(std::size_t i) {
  static const char* kColors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return kColors[i % 10];
}

std::string render_svg(const PlotSpec& spec, const std::vector<Series>& series) {
  double x_lo = std::numeric_limits<double>::infinity(), x_hi = -x_lo;
  double y_lo = x_lo, y_hi = -x_lo;
  auto drawable = [&](double x, double y) {
    return std::isfinite(x) && std::isfinite(y) && (!spec.log_y || y > 0.0);
  };
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) throw std::invalid_argument("series '" + s.label + "' has mismatched x/y");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!drawable(s.x[i], s.y[i])) continue;
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      x_lo = std::min(x_lo, s.x[i]);
      x_hi = std::max(x_hi, s.x[i]);
      y_lo = std::min(y_lo, y);
      y_hi = std::max(y_hi, y);
    }
  }
  if (!std::isfinite(x_lo)) throw std::invalid_argument("nothing to plot");
  if (x_hi == x_lo) x_hi = x_lo + 1.0;
  if (spec.log_y) {
    y_lo = std::floor(y_lo);
    y_hi = std::ceil(y_hi);
    if (y_hi == y_lo) y_hi = y_lo + 1.0;
  } else {
    const double pad = y_hi > y_lo ? 0.05 * (y_hi - y_lo) : 1.0;
    y_lo -= pad;
    y_hi += pad;
  }

  const double left = 80, right = 170, top = 40, bottom = 55;
  const double pw = spec.width - left - right;
  const double ph = spec.height - top - bottom;
  auto px = [&](double x) { return left + (x - x_lo) / (x_hi - x_lo) * pw; };
  auto py = [&](double y) { return top + (1.0 - (y - y_lo) / (y_hi - y_lo)) * ph; };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << spec.width << "\" height=\""
      << spec.height << "\" viewBox=\"0 0 " << spec.width << ' ' << spec.height
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  if (!spec.title.empty()) {
    svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
        << escape(spec.title) << "</text>\n";
  }

  // Axes and ticks.
  svg << "<g stroke=\"#444\" fill=\"none\"><rect x=\"" << num(left) << "\" y=\"" << num(top)
      << "\" width=\"" << num(pw) << "\" height=\"" << num(ph) << "\"/></g>\n";
  svg << "<g fill=\"#222\">\n";
  for (double xt : linear_ticks(x_lo, x_hi)) {
    svg << "<line x1=\"" << num(px(xt)) << "\" x2=\"" << num(px(xt)) << "\" y1=\"" << num(top + ph)
        << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"#444\"/>";
    svg << "<text x=\"" << num(px(xt)) << "\" y=\"" << num(top + ph + 19)
        << "\" text-anchor=\"middle\">" << tick_label(xt) << "</text>\n";
  }
  if (spec.log_y) {
    const int decades = static_cast<int>(y_hi - y_lo);
    const int stride = std::max(1, decades / 8);
    for (int e = static_cast<int>(y_lo); e <= static_cast<int>(y_hi); e += stride) {
      svg << "<line x1=\"" << num(left - 5) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(e))
          << "\" y2=\"" << num(py(e)) << "\" stroke=\"#ddd\"/>";
      svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(e) + 4)
          << "\" text-anchor=\"end\">1e" << e << "</text>\n";
    }
  } else {
    for (double yt : linear_ticks(y_lo, y_hi)) {
      svg << "<line x1=\"" << num(left - 5) << "\" x2=\"" << num(left + pw) << "\" y1=\"" << num(py(yt))
          << "\" y2=\"" << num(py(yt)) << "\" stroke=\"#ddd\"/>";
      svg << "<text x=\"" << num(left - 8) << "\" y=\"" << num(py(yt) + 4)
          << "\" text-anchor=\"end\">" << tick_label(yt) << "</text>\n";
    }
  }
  svg << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(spec.height - 12)
      << "\" text-anchor=\"middle\">" << escape(spec.x_label) << "</text>\n";
  if (!spec.y_label.empty()) {
    svg << "<text transform=\"translate(18," << num(top + ph / 2)
        << ") rotate(-90)\" text-anchor=\"middle\">" << escape(spec.y_label) << "</text>\n";
  }
  svg << "</g>\n";

  // Curves.
  svg << "<g fill=\"none\" stroke-width=\"1.6\">\n";
  for (const auto& s : series) {
    std::string attrs = "stroke=\"" + s.color + "\"";
    if (!s.dash.empty()) attrs += " stroke-dasharray=\"" + s.dash + "\"";
    std::ostringstream pts;
    std::size_t count = 0;
    auto flush = [&] {
      if (count > 1) svg << "<polyline " << attrs << " points=\"" << pts.str() << "\"/>\n";
      pts.str("");
      count = 0;
    };
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!drawable(s.x[i], s.y[i])) {
        flush();
        continue;
      }
      const double y = spec.log_y ? std::log10(s.y[i]) : s.y[i];
      if (y < y_lo || y > y_hi) {
        flush();
        continue;
      }
      pts << num(px(s.x[i])) << ',' << num(py(y)) << ' ';
      ++count;
    }
    flush();
  }
  svg << "</g>\n";

  // Legend.
  svg << "<g>\n";
  double ly = top + 8;
  for (const auto& s : series) {
    if (s.label.empty()) continue;
    const double lx = left + pw + 14;
    svg << "<line x1=\"" << num(lx) << "\" x2=\"" << num(lx + 28) << "\" y1=\"" << num(ly)
        << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.6\"";
    if (!s.dash.empty()) svg << " stroke-dasharray=\"" << s.dash << "\"";
    svg << "/><text x=\"" << num(lx + 34) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.label)
        << "</text>\n";
    ly += 18;
  }
  svg << "</g>\n</svg>\n";
  return svg.str();
}

}  // namespace gradflow
