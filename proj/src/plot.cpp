// Copyright (c) 2026, The mechforge authors
// SPDX-License-Identifier: Apache-2.0
//
#include "mechforge/plot.hpp"

#include <algorithm>
#include <cstdio>
#include <sstream>
#include <vector>

#include "mechforge/tasks.hpp"

namespace mechforge {
namespace {

struct Panel {
  double x0, y0, w, h;  // pixel box
  double lo_x, hi_x, lo_y, hi_y;

  double px(double v) const { return x0 + (v - lo_x) / (hi_x - lo_x) * w; }
  double py(double v) const { return y0 + h - (v - lo_y) / (hi_y - lo_y) * h; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

void widen(double& lo, double& hi) {
  if (hi - lo < 1e-6) {
    lo -= 0.5;
    hi += 0.5;
  }
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
}

void frame(std::ostringstream& o, const Panel& p, const std::string& title, const std::string& xlabel,
           const std::string& ylabel) {
  o << "<rect x='" << p.x0 << "' y='" << p.y0 << "' width='" << p.w << "' height='" << p.h
    << "' fill='none' stroke='#444'/>\n";
  o << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 - 8 << "' text-anchor='middle'>" << title << "</text>\n";
  o << "<text x='" << p.x0 + p.w / 2 << "' y='" << p.y0 + p.h + 32 << "' text-anchor='middle'>" << xlabel
    << "</text>\n";
  o << "<text x='" << p.x0 - 40 << "' y='" << p.y0 + p.h / 2 << "' text-anchor='middle' transform='rotate(-90 "
    << p.x0 - 40 << " " << p.y0 + p.h / 2 << ")'>" << ylabel << "</text>\n";
  for (int i = 0; i <= 4; ++i) {
    const double vx = p.lo_x + (p.hi_x - p.lo_x) * i / 4.0;
    const double vy = p.lo_y + (p.hi_y - p.lo_y) * i / 4.0;
    o << "<text x='" << p.px(vx) << "' y='" << p.y0 + p.h + 15 << "' text-anchor='middle' font-size='10'>" << num(vx)
      << "</text>\n";
    o << "<text x='" << p.x0 - 5 << "' y='" << p.py(vy) + 3 << "' text-anchor='end' font-size='10'>" << num(vy)
      << "</text>\n";
  }
}

void polyline(std::ostringstream& o, const Panel& p, const std::vector<std::pair<double, double>>& pts) {
  o << "<polyline fill='none' stroke='#1f77b4' stroke-width='2' points='";
  for (const auto& [x, y] : pts) o << num(p.px(x)) << "," << num(p.py(y)) << " ";
  o << "'/>\n";
}

}  // namespace

std::string trajectory_svg(const SimTrace& trace, const Scenario& scenario, int block) {
  if (block < 0) block = scenario.task == TaskKind::Catapult ? std::max(0, find_boulder(trace.block_types)) : 0;
  const auto b = static_cast<std::size_t>(block);
  const Vec3 dir = unit_vector(scenario.target);
  const Vec3 start = trace.initial.blocks.at(b).position;

  std::vector<std::pair<double, double>> height{{0.0, start.y()}};
  std::vector<std::pair<double, double>> path{{0.0, start.y()}};
  for (const TraceSample& s : trace.samples) {
    const Vec3& p = s.blocks.at(b).position;
    height.emplace_back(s.time, p.y());
    path.emplace_back((p - start).dot(dir), p.y());
  }
  double ylo = 0.0, yhi = 0.0, dlo = 0.0, dhi = 0.0;
  for (const auto& [d, y] : path) {
    ylo = std::min(ylo, y);
    yhi = std::max(yhi, y);
    dlo = std::min(dlo, d);
    dhi = std::max(dhi, d);
  }
  widen(ylo, yhi);
  widen(dlo, dhi);
  double tlo = 0.0, thi = trace.duration;
  if (thi <= 0) thi = 1.0;

  const Panel left{70, 40, 360, 260, tlo, thi, ylo, yhi};
  const Panel right{540, 40, 360, 260, dlo, dhi, ylo, yhi};
  std::ostringstream o;
  o << "<svg xmlns='http://www.w3.org/2000/svg' width='940' height='350' font-family='sans-serif' font-size='12'>\n";
  o << "<rect width='100%' height='100%' fill='white'/>\n";
  const std::string who = "block " + std::to_string(block) + " (" + block_spec(trace.block_types.at(b)).name + ")";
  frame(o, left, "height of " + who, "time [s]", "y [m]");
  frame(o, right, "path of " + who, std::string("displacement along ") + std::string(to_string(scenario.target)) + " [m]",
        "y [m]");
  for (const BreakEvent& e : trace.events) {
    o << "<line x1='" << num(left.px(e.time)) << "' y1='" << left.y0 << "' x2='" << num(left.px(e.time)) << "' y2='"
      << left.y0 + left.h << "' stroke='#d62728' stroke-dasharray='4 3'/>\n";
  }
  polyline(o, left, height);
  polyline(o, right, path);
  o << "</svg>\n";
  return o.str();
}

}  // namespace mechforge
