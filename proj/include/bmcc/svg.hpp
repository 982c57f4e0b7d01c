#pragma once

#include <algorithm>
#include <cstdio>
#include <span>
#include <sstream>
#include <string>

#include "bmcc/chart.hpp"

namespace bmcc::svg {

// Static line chart of z_t: solid center line, dotted control limits,
// a vertical line between Phase I and Phase II, circles on signals.
inline std::string render_chart(std::span<const ChartPoint> phase1, std::span<const ChartPoint> phase2,
                                const ChartConfig& chart, const std::string& title = "EWMA of LBF") {
  constexpr double width = 900, height = 420, left = 60, right = 20, top = 40, bottom = 40;
  double lo = chart.lcl, hi = chart.ucl;
  long t_min = 0, t_max = 1;
  bool any = false;
  for (auto pts : {phase1, phase2}) {
    for (const auto& p : pts) {
      lo = std::min(lo, p.z);
      hi = std::max(hi, p.z);
      t_min = any ? std::min(t_min, p.t) : p.t;
      t_max = any ? std::max(t_max, p.t) : p.t;
      any = true;
    }
  }
  if (t_max <= t_min) t_max = t_min + 1;
  const double pad = 0.05 * (hi - lo > 0 ? hi - lo : 1.0);
  lo -= pad;
  hi += pad;

  const auto sx = [&](double t) {
    return left + (t - static_cast<double>(t_min)) / static_cast<double>(t_max - t_min) *
                      (width - left - right);
  };
  const auto sy = [&](double z) { return top + (hi - z) / (hi - lo) * (height - top - bottom); };
  const auto num = [](double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    return std::string(buf);
  };

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
    << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
  s << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">"
    << title << "</text>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\""
    << height - bottom << "\" stroke=\"black\"/>\n";
  s << "<line x1=\"" << left << "\" y1=\"" << height - bottom << "\" x2=\"" << width - right
    << "\" y2=\"" << height - bottom << "\" stroke=\"black\"/>\n";

  const auto hline = [&](double z, const char* cls, const char* dash) {
    s << "<line class=\"" << cls << "\" x1=\"" << num(left) << "\" y1=\"" << num(sy(z))
      << "\" x2=\"" << num(width - right) << "\" y2=\"" << num(sy(z)) << "\" stroke=\"black\"";
    if (dash) s << " stroke-dasharray=\"" << dash << "\"";
    s << "/>\n";
    s << "<text x=\"" << num(left - 4) << "\" y=\"" << num(sy(z) + 4)
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" << num(z)
      << "</text>\n";
  };
  hline(chart.mu_z, "center", nullptr);
  hline(chart.ucl, "ucl", "2,3");
  hline(chart.lcl, "lcl", "2,3");

  if (!phase1.empty() && !phase2.empty()) {
    const double x = 0.5 * (sx(static_cast<double>(phase1.back().t)) +
                            sx(static_cast<double>(phase2.front().t)));
    s << "<line class=\"phase\" x1=\"" << num(x) << "\" y1=\"" << top << "\" x2=\"" << num(x)
      << "\" y2=\"" << height - bottom << "\" stroke=\"gray\"/>\n";
  }

  s << "<polyline class=\"z\" fill=\"none\" stroke=\"steelblue\" stroke-width=\"1.2\" points=\"";
  for (auto pts : {phase1, phase2}) {
    for (const auto& p : pts) s << num(sx(static_cast<double>(p.t))) << ',' << num(sy(p.z)) << ' ';
  }
  s << "\"/>\n";
  for (auto pts : {phase1, phase2}) {
    for (const auto& p : pts) {
      if (p.status == ChartStatus::out_of_control) {
        s << "<circle class=\"signal\" cx=\"" << num(sx(static_cast<double>(p.t))) << "\" cy=\""
          << num(sy(p.z)) << "\" r=\"3\" fill=\"red\"/>\n";
      }
    }
  }
  s << "<text x=\"" << width / 2 << "\" y=\"" << height - 8
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">t</text>\n";
  s << "</svg>\n";
  return s.str();
}

}  // namespace bmcc::svg
