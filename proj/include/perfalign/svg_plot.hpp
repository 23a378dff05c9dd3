#pragma once

// Minimal static SVG line charts for sweep results. Output text depends only
// on the input points, so re-rendering the same CSV gives the same bytes.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace perfalign {

struct PlotSeries {
  std::string name;
  std::vector<std::pair<double, double>> points;  // every observation (scatter)
  std::vector<std::pair<double, double>> line;    // summary polyline (e.g. medians)
};

struct PlotSpec {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  // Values at or below zero are clamped to this on log axes.
  double log_floor = 1e-18;
};

namespace detail {

inline std::string fmt(const char* pattern, double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), pattern, v);
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
      default: out += c;
    }
  }
  return out;
}

inline constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b"};

}  // namespace detail

inline std::string render_svg_plot(const PlotSpec& spec, const std::vector<PlotSeries>& series) {
  constexpr double W = 640, H = 420, L = 80, R = 20, T = 40, B = 60;
  auto tx = [&](double v) { return spec.log_x ? std::log10(std::max(v, spec.log_floor)) : v; };
  auto ty = [&](double v) { return spec.log_y ? std::log10(std::max(v, spec.log_floor)) : v; };

  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : series) {
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      x0 = std::min(x0, tx(x)); x1 = std::max(x1, tx(x));
      y0 = std::min(y0, ty(y)); y1 = std::max(y1, ty(y));
    }
  }
  if (!std::isfinite(x0)) { x0 = 0; x1 = 1; y0 = 0; y1 = 1; }
  if (x1 - x0 < 1e-12) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-12) { y0 -= 0.5; y1 += 0.5; }
  if (spec.log_y) { y0 = std::floor(y0); y1 = std::ceil(y1); }
  const double pad_x = 0.04 * (x1 - x0);
  x0 -= pad_x; x1 += pad_x;

  auto px = [&](double v) { return L + (tx(v) - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double v) { return H - B - (ty(v) - y0) / (y1 - y0) * (H - T - B); };
  auto py_raw = [&](double t) { return H - B - (t - y0) / (y1 - y0) * (H - T - B); };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" viewBox=\"0 0 640 420\">\n";
  svg += "<rect width=\"640\" height=\"420\" fill=\"white\"/>\n";
  svg += "<text x=\"320\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"15\">" +
         detail::xml_escape(spec.title) + "</text>\n";
  svg += "<line x1=\"80\" y1=\"360\" x2=\"620\" y2=\"360\" stroke=\"black\"/>\n";
  svg += "<line x1=\"80\" y1=\"40\" x2=\"80\" y2=\"360\" stroke=\"black\"/>\n";

  // y ticks: every decade on log axes, five even steps otherwise.
  std::vector<double> yticks;
  if (spec.log_y) {
    const double step = std::max(1.0, std::ceil((y1 - y0) / 8.0));
    for (double t = y0; t <= y1 + 1e-9; t += step) yticks.push_back(t);
  } else {
    for (int i = 0; i <= 5; ++i) yticks.push_back(y0 + (y1 - y0) * i / 5.0);
  }
  for (double t : yticks) {
    const std::string y = detail::fmt("%.2f", py_raw(t));
    const std::string label = spec.log_y ? "1e" + detail::fmt("%.0f", t) : detail::fmt("%.3g", t);
    svg += "<line x1=\"76\" y1=\"" + y + "\" x2=\"80\" y2=\"" + y + "\" stroke=\"black\"/>\n";
    svg += "<text x=\"72\" y=\"" + y + "\" text-anchor=\"end\" dominant-baseline=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + label + "</text>\n";
  }

  // x ticks at the distinct observed x values.
  std::vector<double> xs;
  for (const auto& s : series)
    for (const auto& p : s.points) xs.push_back(p.first);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  for (double v : xs) {
    const std::string x = detail::fmt("%.2f", px(v));
    svg += "<line x1=\"" + x + "\" y1=\"360\" x2=\"" + x + "\" y2=\"364\" stroke=\"black\"/>\n";
    svg += "<text x=\"" + x + "\" y=\"378\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" + detail::fmt("%g", v) + "</text>\n";
  }

  svg += "<text x=\"350\" y=\"406\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">" +
         detail::xml_escape(spec.x_label) + "</text>\n";
  svg += "<text x=\"18\" y=\"200\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" transform=\"rotate(-90 18 200)\">" +
         detail::xml_escape(spec.y_label) + (spec.log_y ? " (log10)" : "") + "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const std::string color = detail::kPalette[si % std::size(detail::kPalette)];
    for (const auto& [x, y] : s.points) {
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      svg += "<circle cx=\"" + detail::fmt("%.2f", px(x)) + "\" cy=\"" + detail::fmt("%.2f", py(y)) +
             "\" r=\"2.5\" fill=\"" + color + "\" fill-opacity=\"0.45\"/>\n";
    }
    if (!s.line.empty()) {
      svg += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"2\" points=\"";
      for (std::size_t i = 0; i < s.line.size(); ++i) {
        if (i) svg += ' ';
        svg += detail::fmt("%.2f", px(s.line[i].first)) + "," + detail::fmt("%.2f", py(s.line[i].second));
      }
      svg += "\"/>\n";
    }
    const std::string ly = detail::fmt("%.0f", 52.0 + 16.0 * static_cast<double>(si));
    svg += "<rect x=\"500\" y=\"" + detail::fmt("%.0f", 44.0 + 16.0 * static_cast<double>(si)) +
           "\" width=\"10\" height=\"10\" fill=\"" + color + "\"/>\n";
    svg += "<text x=\"516\" y=\"" + ly + "\" dominant-baseline=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" +
           detail::xml_escape(s.name) + "</text>\n";
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace perfalign
