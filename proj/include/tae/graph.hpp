#pragma once

#include <array>
#include <vector>

#include "tae/scenario.hpp"

namespace tae {

constexpr double kAgentLaneRadius = 20.0;
constexpr double kAgentAgentRadius = 30.0;

// Directed edge between node-local indices with a pose-invariant feature:
// [along/30, lat/30, dist/30, cos(ddir), sin(ddir), fallback_flag], where
// (along, lat) place the source origin in the destination node's frame.
struct GraphEdge {
  int src = 0, dst = 0;
  std::array<double, 6> feat{};
};

// One scenario's combined lane/agent graph. Node numbering: lanes first in
// ascending lane-id order (0..L-1), then agents in ascending agent-id order
// (L..L+A-1). Edge lists are emitted in canonical node order (a pure function
// of the sorted ids), so downstream accumulation is permutation-independent.
struct SceneGraph {
  int n_lanes = 0, n_agents = 0;
  std::vector<int> lane_ids;    // node i (< L) is lane lane_ids[i]
  std::vector<int> agent_ids;   // node L+j is agent agent_ids[j]
  std::vector<int> agent_pos;   // index into scenario.agents for node L+j
  std::vector<std::array<double, 4>> lane_desc;  // [len/50, w/3.5, |turn|/pi, turn/pi]
  std::vector<Frame> node_frame;                 // per node, size L+A
  // Relations: messages flow src -> dst.
  std::vector<GraphEdge> succ, pred, left, right;  // lane -> lane
  std::vector<GraphEdge> l2a;                      // lane -> agent (radius or fallback)
  std::vector<GraphEdge> a2l;                      // agent -> lane
  std::vector<GraphEdge> a2a;                      // agent -> agent, symmetric

  int nodes() const { return n_lanes + n_agents; }
};

SceneGraph graph_build(const Scenario& s);

}  // namespace tae
