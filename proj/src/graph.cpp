#include "tae/graph.hpp"

#include <algorithm>
#include <cmath>
#include <map>

namespace tae {
namespace {

constexpr double kPi = 3.14159265358979323846;

double seg_point_dist(Pt a, Pt b, Pt p) {
  Pt d = b - a;
  double len2 = dot(d, d);
  double t = len2 > 1e-12 ? std::clamp(dot(p - a, d) / len2, 0.0, 1.0) : 0.0;
  Pt q = a + t * d;
  return (p - q).norm();
}

double polyline_dist(const Lane& l, Pt p) {
  double best = 1e300;
  for (size_t i = 1; i < l.pts.size(); ++i)
    best = std::min(best, seg_point_dist(l.pts[i - 1], l.pts[i], p));
  return best;
}

Frame lane_frame(const Lane& l) {
  size_t mid = l.pts.size() / 2;
  size_t i0 = mid > 0 ? mid - 1 : 0;
  Pt d = l.pts[std::min(i0 + 1, l.pts.size() - 1)] - l.pts[i0];
  double n = d.norm();
  Frame f;
  f.origin = l.pts[mid];
  f.c = n > 1e-12 ? d.x / n : 1.0;
  f.s = n > 1e-12 ? d.y / n : 0.0;
  return f;
}

std::array<double, 4> lane_descriptor(const Lane& l) {
  double len = 0, turn = 0, abs_turn = 0;
  double prev = 0;
  bool have_prev = false;
  for (size_t i = 1; i < l.pts.size(); ++i) {
    Pt d = l.pts[i] - l.pts[i - 1];
    len += d.norm();
    if (d.norm() > 1e-9) {
      double ang = std::atan2(d.y, d.x);
      if (have_prev) {
        double dd = ang - prev;
        while (dd > kPi) dd -= 2 * kPi;
        while (dd < -kPi) dd += 2 * kPi;
        turn += dd;
        abs_turn += std::abs(dd);
      }
      prev = ang;
      have_prev = true;
    }
  }
  return {len / 50.0, l.width / 3.5, abs_turn / kPi, turn / kPi};
}

GraphEdge make_edge(int src, int dst, const Frame& fs, const Frame& fd, double flag) {
  GraphEdge e;
  e.src = src;
  e.dst = dst;
  Pt rel = fd.to_local(fs.origin);
  double dist = rel.norm();
  e.feat = {rel.x / kAgentAgentRadius, rel.y / kAgentAgentRadius, dist / kAgentAgentRadius,
            fs.c * fd.c + fs.s * fd.s, fs.s * fd.c - fs.c * fd.s, flag};
  return e;
}

}  // namespace

SceneGraph graph_build(const Scenario& s) {
  SceneGraph g;
  g.n_lanes = int(s.lanes.size());
  g.n_agents = int(s.agents.size());

  // Canonical node order: ascending ids.
  std::map<int, int> lane_node;  // lane id -> node
  std::vector<const Lane*> lanes_by_node;
  for (const auto& l : s.lanes) g.lane_ids.push_back(l.id);
  std::sort(g.lane_ids.begin(), g.lane_ids.end());
  for (int id : g.lane_ids) {
    lane_node[id] = int(lanes_by_node.size());
    lanes_by_node.push_back(s.lane_by_id(id));
  }
  std::vector<std::pair<int, int>> aorder;  // (agent id, position)
  for (size_t i = 0; i < s.agents.size(); ++i) aorder.emplace_back(s.agents[i].id, int(i));
  std::sort(aorder.begin(), aorder.end());
  for (auto& [id, pos] : aorder) {
    g.agent_ids.push_back(id);
    g.agent_pos.push_back(pos);
  }

  g.node_frame.resize(g.nodes());
  g.lane_desc.resize(g.n_lanes);
  for (int i = 0; i < g.n_lanes; ++i) {
    g.node_frame[i] = lane_frame(*lanes_by_node[i]);
    g.lane_desc[i] = lane_descriptor(*lanes_by_node[i]);
  }
  for (int j = 0; j < g.n_agents; ++j)
    g.node_frame[g.n_lanes + j] = compute_frame(s.agents[g.agent_pos[j]], s);

  auto edge = [&](std::vector<GraphEdge>& dstv, int src, int dst, double flag = 0.0) {
    dstv.push_back(make_edge(src, dst, g.node_frame[src], g.node_frame[dst], flag));
  };

  // Lane adjacency, destination-major in id order.
  for (int i = 0; i < g.n_lanes; ++i) {
    const Lane& l = *lanes_by_node[i];
    std::vector<int> su(l.succ), pr(l.pred);
    std::sort(su.begin(), su.end());
    std::sort(pr.begin(), pr.end());
    for (int n : su) edge(g.succ, lane_node[n], i);
    for (int n : pr) edge(g.pred, lane_node[n], i);
    if (l.left >= 0) edge(g.left, lane_node[l.left], i);
    if (l.right >= 0) edge(g.right, lane_node[l.right], i);
  }

  // Agent <-> lane within radius; otherwise nearest lane with a flag.
  for (int j = 0; j < g.n_agents; ++j) {
    const Agent& a = s.agents[g.agent_pos[j]];
    Pt p = a.obs.back();
    int anode = g.n_lanes + j;
    int nearest = 0;
    double best = 1e300;
    bool any = false;
    for (int i = 0; i < g.n_lanes; ++i) {
      double d = polyline_dist(*lanes_by_node[i], p);
      if (d < best) {
        best = d;
        nearest = i;
      }
      if (d <= kAgentLaneRadius) {
        edge(g.l2a, i, anode);
        edge(g.a2l, anode, i);
        any = true;
      }
    }
    if (!any) {
      edge(g.l2a, nearest, anode, 1.0);
      edge(g.a2l, anode, nearest, 1.0);
    }
  }

  // Agent <-> agent within radius, symmetric by construction.
  for (int j = 0; j < g.n_agents; ++j) {
    Pt pj = s.agents[g.agent_pos[j]].obs.back();
    for (int k = 0; k < g.n_agents; ++k) {
      if (k == j) continue;
      Pt pk = s.agents[g.agent_pos[k]].obs.back();
      if ((pj - pk).norm() <= kAgentAgentRadius)
        edge(g.a2a, g.n_lanes + k, g.n_lanes + j);
    }
  }
  return g;
}

}  // namespace tae
