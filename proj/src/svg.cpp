#include "tae/svg.hpp"

#include <algorithm>
#include <cstdio>

namespace tae {
namespace {

struct Bounds {
  double lo_x = 1e300, lo_y = 1e300, hi_x = -1e300, hi_y = -1e300;
  void take(const Pt& p) {
    lo_x = std::min(lo_x, p.x);
    hi_x = std::max(hi_x, p.x);
    lo_y = std::min(lo_y, p.y);
    hi_y = std::max(hi_y, p.y);
  }
};

// SVG y grows downwards; world y is flipped at emission time.
void polyline(std::string& out, const char* cls, const std::vector<Pt>& pts) {
  if (pts.size() < 2) return;
  out += "<polyline class=\"";
  out += cls;
  out += "\" points=\"";
  char buf[48];
  for (size_t i = 0; i < pts.size(); ++i) {
    std::snprintf(buf, sizeof buf, i ? " %.2f,%.2f" : "%.2f,%.2f", pts[i].x, -pts[i].y);
    out += buf;
  }
  out += "\"/>\n";
}

}  // namespace

std::string scenario_svg(const Scenario& s, const std::vector<SvgAgentTrajs>& generated) {
  Bounds b;
  for (const Lane& l : s.lanes)
    for (const Pt& p : l.pts) b.take(p);
  for (const Agent& a : s.agents) {
    for (const Pt& p : a.obs) b.take(p);
    for (const Pt& p : a.fut) b.take(p);
  }
  for (const auto& g : generated)
    for (const auto& traj : g.generated)
      for (const Pt& p : traj) b.take(p);
  if (b.lo_x > b.hi_x) b = Bounds{0, 0, 1, 1};
  const double pad = 5.0;

  char head[256];
  std::snprintf(head, sizeof head,
                "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"%.2f %.2f %.2f %.2f\" "
                "width=\"800\">\n",
                b.lo_x - pad, -b.hi_y - pad, b.hi_x - b.lo_x + 2 * pad, b.hi_y - b.lo_y + 2 * pad);
  std::string out = head;
  out +=
      "<style>polyline{fill:none;stroke-linecap:round}"
      ".lane{stroke:#c8c8c8;stroke-width:0.4}"
      ".obs{stroke:#555555;stroke-width:0.3}"
      ".ref{stroke:#d62728;stroke-width:0.35}"
      ".gen{stroke:#2ca02c;stroke-width:0.35}</style>\n";

  for (const Lane& l : s.lanes) polyline(out, "lane", l.pts);
  for (const Agent& a : s.agents) polyline(out, "obs", a.obs);
  for (const Agent& a : s.agents) {
    std::vector<Pt> fut = a.fut;
    if (!a.obs.empty() && !fut.empty()) fut.insert(fut.begin(), a.obs.back());
    polyline(out, "ref", fut);
  }
  for (const auto& g : generated)
    for (const auto& traj : g.generated) polyline(out, "gen", traj);
  out += "</svg>\n";
  return out;
}

}  // namespace tae
