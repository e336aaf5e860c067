// Copyright 2026 The SND Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Minimal self-contained SVG line plots and heatmaps. CSV stays the
// canonical output; these are for a quick look.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

namespace snd::svg {

struct Series {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  bool log_x = false;
  bool log_y = false;
  std::vector<Series> series;
};

namespace detail {

inline constexpr double kWidth = 640, kHeight = 420, kLeft = 70, kRight = 20, kTop = 36, kBottom = 50;

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

inline const char* color(std::size_t i) {
  static const char* palette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                                  "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  return palette[i % 10];
}

inline void header(std::ostream& os, const std::string& title) {
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << kWidth / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title)
     << "</text>\n";
}

inline void axes(std::ostream& os, const std::string& xl, const std::string& yl, double x0, double x1, double y0,
                 double y1, bool log_x, bool log_y) {
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double f = i / 4.0;
    const double xv = log_x ? std::pow(10.0, x0 + f * (x1 - x0)) : x0 + f * (x1 - x0);
    const double yv = log_y ? std::pow(10.0, y0 + f * (y1 - y0)) : y0 + f * (y1 - y0);
    os << "<text x=\"" << kLeft + f * pw << "\" y=\"" << kHeight - kBottom + 16 << "\" text-anchor=\"middle\">"
       << num(xv) << "</text>\n";
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << kHeight - kBottom - f * ph + 4 << "\" text-anchor=\"end\">"
       << num(yv) << "</text>\n";
  }
  os << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 10 << "\" text-anchor=\"middle\">" << escape(xl)
     << "</text>\n";
  os << "<text x=\"16\" y=\"" << kTop + ph / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
     << kTop + ph / 2 << ")\">" << escape(yl) << "</text>\n";
}

}  // namespace detail

inline void write(std::ostream& os, const LinePlot& plot) {
  using namespace detail;
  auto tx = [&](double v) { return plot.log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return plot.log_y ? std::log10(v) : v; };
  auto usable = [&](double x, double y) {
    return std::isfinite(tx(x)) && std::isfinite(ty(y)) && (!plot.log_x || x > 0) && (!plot.log_y || y > 0);
  };
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const auto& s : plot.series) {
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      x0 = std::min(x0, tx(s.x[i]));
      x1 = std::max(x1, tx(s.x[i]));
      y0 = std::min(y0, ty(s.y[i]));
      y1 = std::max(y1, ty(s.y[i]));
    }
  }
  if (!(x1 >= x0)) x0 = 0, x1 = 1;
  if (!(y1 >= y0)) y0 = 0, y1 = 1;
  if (x1 == x0) x1 = x0 + 1;
  if (y1 == y0) y1 = y0 + 1;
  const double pad = 0.05 * (y1 - y0);
  y0 -= pad;
  y1 += pad;
  header(os, plot.title);
  axes(os, plot.x_label, plot.y_label, x0, x1, y0, y1, plot.log_x, plot.log_y);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    os << "<polyline fill=\"none\" stroke=\"" << color(k) << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!usable(s.x[i], s.y[i])) continue;
      os << num(kLeft + (tx(s.x[i]) - x0) / (x1 - x0) * pw) << ',' << num(kTop + ph - (ty(s.y[i]) - y0) / (y1 - y0) * ph)
         << ' ';
    }
    os << "\"/>\n";
    if (!s.name.empty()) {
      os << "<text x=\"" << kLeft + pw - 8 << "\" y=\"" << kTop + 16 + 14 * static_cast<double>(k)
         << "\" text-anchor=\"end\" fill=\"" << color(k) << "\">" << escape(s.name) << "</text>\n";
    }
  }
  os << "</svg>\n";
}

// Rows are drawn bottom to top; values are mapped to grey levels on a log
// scale (zero is white).
inline void write_heatmap(std::ostream& os, const std::string& title, const std::string& x_label,
                          const std::string& y_label, const std::vector<std::vector<double>>& rows, double x0,
                          double x1, double y0, double y1) {
  using namespace detail;
  header(os, title);
  axes(os, x_label, y_label, x0, x1, y0, y1, false, false);
  double top = 0.0;
  for (const auto& r : rows) {
    for (double v : r) top = std::max(top, v);
  }
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  const double rh = rows.empty() ? ph : ph / static_cast<double>(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double cw = rows[i].empty() ? pw : pw / static_cast<double>(rows[i].size());
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      const double v = rows[i][j];
      if (!(v > 0.0) || !(top > 0.0)) continue;
      const double f = std::log1p(v) / std::log1p(top);
      const int g = static_cast<int>(255.0 * (1.0 - f));
      os << "<rect x=\"" << num(kLeft + cw * static_cast<double>(j)) << "\" y=\""
         << num(kTop + ph - rh * static_cast<double>(i + 1)) << "\" width=\"" << num(cw + 0.5) << "\" height=\""
         << num(rh + 0.5) << "\" fill=\"rgb(" << g << ',' << g << ',' << g << ")\"/>\n";
    }
  }
  os << "</svg>\n";
}

}  // namespace snd::svg
