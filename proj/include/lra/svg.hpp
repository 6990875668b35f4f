#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include "lra/errors.hpp"

namespace lra::svg {

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> points;
};

namespace detail {

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};
  return colors[i % 8];
}

struct Ticks {
  std::vector<double> values;
};

inline Ticks nice_ticks(double lo, double hi, int target = 5) {
  Ticks t;
  if (!(hi > lo)) {
    hi = lo + 1.0;
    lo -= 1.0;
  }
  const double raw = (hi - lo) / target;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (const double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (mag * m >= raw) {
      step = mag * m;
      break;
    }
  const double first = std::ceil(lo / step) * step;
  for (double v = first; v <= hi + 1e-12 * step; v += step) t.values.push_back(v);
  return t;
}

inline std::string fmt(double v) {
  std::ostringstream s;
  s << std::setprecision(6) << v;
  return s.str();
}

}  // namespace detail

/// Multi-series line plot with axes, ticks and a legend. Styling is fixed;
/// the point of these files is quick visual inspection of sweep outputs.
inline void write_line_plot(const std::string& path, const std::string& title,
                            const std::string& xlabel, const std::string& ylabel,
                            const std::vector<Series>& series) {
  const double width = 860.0, height = 560.0;
  const double ml = 90.0, mr = 30.0, mt = 50.0, mb = 70.0;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (xmin > xmax) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (ymin == ymax) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double ypad = 0.05 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;

  const auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (width - ml - mr); };
  const auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write plot: " + path, 0);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";

  // Axes and ticks.
  out << "<line x1=\"" << ml << "\" y1=\"" << height - mb << "\" x2=\"" << width - mr << "\" y2=\""
      << height - mb << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << height - mb
      << "\" stroke=\"black\"/>\n";
  for (const double v : detail::nice_ticks(xmin, xmax).values) {
    out << "<line x1=\"" << px(v) << "\" y1=\"" << height - mb << "\" x2=\"" << px(v) << "\" y2=\""
        << height - mb + 6 << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << px(v) << "\" y=\"" << height - mb + 22
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << detail::fmt(v)
        << "</text>\n";
  }
  for (const double v : detail::nice_ticks(ymin, ymax).values) {
    out << "<line x1=\"" << ml - 6 << "\" y1=\"" << py(v) << "\" x2=\"" << ml << "\" y2=\"" << py(v)
        << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << width - mr << "\" y2=\"" << py(v)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << ml - 10 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">" << detail::fmt(v)
        << "</text>\n";
  }
  out << "<text x=\"" << (ml + width - mr) / 2 << "\" y=\"" << height - 18
      << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\">" << xlabel
      << "</text>\n";
  out << "<text x=\"22\" y=\"" << (mt + height - mb) / 2
      << "\" text-anchor=\"middle\" font-size=\"14\" font-family=\"sans-serif\" transform=\"rotate(-90 "
         "22 " << (mt + height - mb) / 2 << ")\">" << ylabel << "</text>\n";

  for (std::size_t i = 0; i < series.size(); ++i) {
    const auto& s = series[i];
    if (s.points.empty()) continue;
    out << "<polyline fill=\"none\" stroke=\"" << detail::palette(i) << "\" stroke-width=\"2\" points=\"";
    for (const auto& [x, y] : s.points) out << px(x) << ',' << py(y) << ' ';
    out << "\"/>\n";
    for (const auto& [x, y] : s.points)
      out << "<circle cx=\"" << px(x) << "\" cy=\"" << py(y) << "\" r=\"3\" fill=\""
          << detail::palette(i) << "\"/>\n";
  }

  // Legend.
  const double lx = width - mr - 190.0, ly = mt + 8.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<rect x=\"" << lx << "\" y=\"" << ly + 20.0 * i << "\" width=\"14\" height=\"14\" fill=\""
        << detail::palette(i) << "\"/>\n";
    out << "<text x=\"" << lx + 20 << "\" y=\"" << ly + 20.0 * i + 12
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

/// Grouped bar chart: one category per entry of `categories`, one bar per
/// series within each category. Used for before/after coefficient displays.
inline void write_bar_chart(const std::string& path, const std::string& title,
                            const std::vector<std::string>& categories,
                            const std::vector<Series>& series) {
  const double width = 860.0, height = 560.0;
  const double ml = 90.0, mr = 30.0, mt = 50.0, mb = 70.0;
  double ymin = 0.0, ymax = 0.0;
  for (const auto& s : series)
    for (const auto& [x, y] : s.points) {
      ymin = std::min(ymin, y);
      ymax = std::max(ymax, y);
    }
  if (ymin == ymax) {
    ymin -= 1.0;
    ymax += 1.0;
  }
  const double ypad = 0.08 * (ymax - ymin);
  ymin -= ypad;
  ymax += ypad;
  const auto py = [&](double y) { return height - mb - (y - ymin) / (ymax - ymin) * (height - mt - mb); };

  std::ofstream out(path);
  if (!out) throw ParseError("cannot write plot: " + path, 0);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"28\" text-anchor=\"middle\" font-size=\"18\" "
         "font-family=\"sans-serif\">" << title << "</text>\n";

  const std::size_t ncat = categories.size();
  const std::size_t nser = std::max<std::size_t>(1, series.size());
  const double span = (width - ml - mr) / static_cast<double>(ncat);
  const double bar = span * 0.8 / static_cast<double>(nser);

  for (const double v : detail::nice_ticks(ymin, ymax).values) {
    out << "<line x1=\"" << ml << "\" y1=\"" << py(v) << "\" x2=\"" << width - mr << "\" y2=\"" << py(v)
        << "\" stroke=\"#dddddd\"/>\n";
    out << "<text x=\"" << ml - 10 << "\" y=\"" << py(v) + 4
        << "\" text-anchor=\"end\" font-size=\"12\" font-family=\"sans-serif\">" << detail::fmt(v)
        << "</text>\n";
  }
  out << "<line x1=\"" << ml << "\" y1=\"" << py(0.0) << "\" x2=\"" << width - mr << "\" y2=\""
      << py(0.0) << "\" stroke=\"black\"/>\n";

  for (std::size_t c = 0; c < ncat; ++c) {
    for (std::size_t s = 0; s < series.size(); ++s) {
      if (c >= series[s].points.size()) continue;
      const double v = series[s].points[c].second;
      const double x = ml + span * c + span * 0.1 + bar * s;
      const double y0 = py(0.0);
      const double y1 = py(v);
      out << "<rect x=\"" << x << "\" y=\"" << std::min(y0, y1) << "\" width=\"" << bar
          << "\" height=\"" << std::abs(y1 - y0) << "\" fill=\"" << detail::palette(s) << "\"/>\n";
    }
    out << "<text x=\"" << ml + span * c + span * 0.5 << "\" y=\"" << height - mb + 22
        << "\" text-anchor=\"middle\" font-size=\"12\" font-family=\"sans-serif\">" << categories[c]
        << "</text>\n";
  }
  const double lx = width - mr - 190.0, ly = mt + 8.0;
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << "<rect x=\"" << lx << "\" y=\"" << ly + 20.0 * i << "\" width=\"14\" height=\"14\" fill=\""
        << detail::palette(i) << "\"/>\n";
    out << "<text x=\"" << lx + 20 << "\" y=\"" << ly + 20.0 * i + 12
        << "\" font-size=\"12\" font-family=\"sans-serif\">" << series[i].label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace lra::svg
