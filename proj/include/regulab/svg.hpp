#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "regulab/common.hpp"

namespace regulab {

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct PlotSpec {
  std::string title;
  std::string xlabel;
  std::string ylabel;
  bool logx = false;
  bool logy = false;
  bool scatter = false;
  int width = 800;
  int height = 520;
};

namespace detail_svg {

inline std::string fmt(double v, const char* spec = "%.2f") {
  char buf[48];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

inline std::string escape_xml(const std::string& s) {
  std::string out;
  out.reserve(s.size());
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

/// Tick positions at "nice" steps (1, 2 or 5 times a power of ten) covering
/// [lo, hi]; for log axes the caller passes decade exponents instead.
inline std::vector<double> nice_ticks(double lo, double hi) {
  std::vector<double> ticks;
  const double span = hi - lo;
  if (!(span > 0.0) || !std::isfinite(span)) return {lo};
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double norm = raw / mag;
  const double step = (norm <= 1.5 ? 1.0 : norm <= 3.5 ? 2.0 : norm <= 7.5 ? 5.0 : 10.0) * mag;
  double t = std::ceil(lo / step - 1e-9) * step;
  for (; t <= hi + 1e-9 * span; t += step) ticks.push_back(t == 0.0 ? 0.0 : t);
  return ticks;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  bool log = false;
  double map(double v, double pix_lo, double pix_hi) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    const double frac = (h == l) ? 0.5 : (a - l) / (h - l);
    return pix_lo + frac * (pix_hi - pix_lo);
  }
  std::vector<double> ticks() const {
    if (!log) return nice_ticks(lo, hi);
    const int e0 = static_cast<int>(std::floor(std::log10(lo) + 1e-12));
    const int e1 = static_cast<int>(std::ceil(std::log10(hi) - 1e-12));
    const int stride = std::max(1, (e1 - e0) / 8);
    std::vector<double> out;
    for (int e = e0; e <= e1; e += stride) out.push_back(std::pow(10.0, e));
    return out;
  }
};

}  // namespace detail_svg

/// Deterministic hand-rolled SVG line/scatter plot.  Pure function of its
/// arguments — identical inputs render identical bytes.  Empty input draws
/// the axes frame with a default [0, 1] range.  Log axes require strictly
/// positive data.
inline std::string render_plot(const std::vector<PlotSeries>& series, const PlotSpec& spec) {
  using namespace detail_svg;
  static constexpr const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                            "#9467bd", "#ff7f0e", "#17becf"};
  constexpr std::size_t palette_size = sizeof(palette) / sizeof(palette[0]);

  // data extent over finite points
  double xmin = inf, xmax = -inf, ymin = inf, ymax = -inf;
  std::size_t points = 0;
  for (const PlotSeries& s : series) {
    if (s.x.size() != s.y.size())
      throw std::invalid_argument("render_plot: series x/y length mismatch");
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if ((spec.logx && s.x[i] <= 0.0) || (spec.logy && s.y[i] <= 0.0))
        throw config_error("plot: log axis requires positive data");
      xmin = std::min(xmin, s.x[i]);
      xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
      ++points;
    }
  }
  if (points == 0) {
    xmin = spec.logx ? 1.0 : 0.0;
    xmax = spec.logx ? 10.0 : 1.0;
    ymin = spec.logy ? 1.0 : 0.0;
    ymax = spec.logy ? 10.0 : 1.0;
  }
  // degenerate ranges get a symmetric pad so the point sits mid-frame
  if (xmin == xmax) {
    const double pad = spec.logx ? 0.0 : (xmin == 0.0 ? 0.5 : std::abs(xmin) * 0.5);
    if (spec.logx) {
      xmin /= 2.0;
      xmax *= 2.0;
    } else {
      xmin -= pad;
      xmax += pad;
    }
  }
  if (ymin == ymax) {
    if (spec.logy) {
      ymin /= 2.0;
      ymax *= 2.0;
    } else {
      const double pad = ymin == 0.0 ? 0.5 : std::abs(ymin) * 0.5;
      ymin -= pad;
      ymax += pad;
    }
  }

  const double ml = 72, mr = 24, mt = 42, mb = 56;
  const double px0 = ml, px1 = spec.width - mr;
  const double py0 = spec.height - mb, py1 = mt;  // y grows downward in SVG
  Axis ax{xmin, xmax, spec.logx};
  Axis ay{ymin, ymax, spec.logy};

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(spec.width) +
         "\" height=\"" + std::to_string(spec.height) + "\" viewBox=\"0 0 " +
         std::to_string(spec.width) + " " + std::to_string(spec.height) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!spec.title.empty())
    svg += "<text x=\"" + fmt((px0 + px1) / 2) +
           "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"16\">" +
           escape_xml(spec.title) + "</text>\n";

  // gridlines + tick labels
  for (double t : ax.ticks()) {
    if (t < xmin - 1e-12 || t > xmax * (1.0 + 1e-12) + 1e-12) continue;
    const double px = ax.map(t, px0, px1);
    svg += "<line x1=\"" + fmt(px) + "\" y1=\"" + fmt(py0) + "\" x2=\"" + fmt(px) + "\" y2=\"" +
           fmt(py1) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(px) + "\" y=\"" + fmt(py0 + 18) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt(t, "%.6g") + "</text>\n";
  }
  for (double t : ay.ticks()) {
    if (t < ymin - 1e-12 || t > ymax * (1.0 + 1e-12) + 1e-12) continue;
    const double py = ay.map(t, py0, py1);
    svg += "<line x1=\"" + fmt(px0) + "\" y1=\"" + fmt(py) + "\" x2=\"" + fmt(px1) + "\" y2=\"" +
           fmt(py) + "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    svg += "<text x=\"" + fmt(px0 - 6) + "\" y=\"" + fmt(py + 4) +
           "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" +
           fmt(t, "%.6g") + "</text>\n";
  }

  // axes frame
  svg += "<rect x=\"" + fmt(px0) + "\" y=\"" + fmt(py1) + "\" width=\"" + fmt(px1 - px0) +
         "\" height=\"" + fmt(py0 - py1) +
         "\" fill=\"none\" stroke=\"#000000\" stroke-width=\"1\"/>\n";
  if (!spec.xlabel.empty())
    svg += "<text x=\"" + fmt((px0 + px1) / 2) + "\" y=\"" + fmt(py0 + 40) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
           escape_xml(spec.xlabel) + "</text>\n";
  if (!spec.ylabel.empty())
    svg += "<text x=\"18\" y=\"" + fmt((py0 + py1) / 2) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
           "transform=\"rotate(-90 18 " +
           fmt((py0 + py1) / 2) + ")\">" + escape_xml(spec.ylabel) + "</text>\n";

  // data
  for (std::size_t si = 0; si < series.size(); ++si) {
    const PlotSeries& s = series[si];
    const char* color = palette[si % palette_size];
    if (spec.scatter) {
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
        svg += "<circle cx=\"" + fmt(ax.map(s.x[i], px0, px1)) + "\" cy=\"" +
               fmt(ay.map(s.y[i], py0, py1)) + "\" r=\"3\" fill=\"" + color + "\"/>\n";
      }
    } else {
      std::string d;
      bool pen_down = false;
      for (std::size_t i = 0; i < s.x.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          pen_down = false;
          continue;
        }
        d += (pen_down ? " L" : (d.empty() ? "M" : " M"));
        d += fmt(ax.map(s.x[i], px0, px1)) + "," + fmt(ay.map(s.y[i], py0, py1));
        pen_down = true;
      }
      if (!d.empty())
        svg += "<path d=\"" + d + "\" fill=\"none\" stroke=\"" + color +
               "\" stroke-width=\"1.5\"/>\n";
    }
    if (!s.label.empty()) {
      const double ly = py1 + 16 + 16 * static_cast<double>(si);
      svg += "<line x1=\"" + fmt(px1 - 120) + "\" y1=\"" + fmt(ly - 4) + "\" x2=\"" +
             fmt(px1 - 100) + "\" y2=\"" + fmt(ly - 4) + "\" stroke=\"" + color +
             "\" stroke-width=\"2\"/>\n";
      svg += "<text x=\"" + fmt(px1 - 94) + "\" y=\"" + fmt(ly) +
             "\" font-family=\"sans-serif\" font-size=\"11\">" + escape_xml(s.label) +
             "</text>\n";
    }
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace regulab
