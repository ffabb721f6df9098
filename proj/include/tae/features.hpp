#pragma once

#include <vector>

#include "tae/graph.hpp"
#include "tae/params.hpp"
#include "tae/scenario.hpp"
#include "tae/tape.hpp"

namespace tae {

// Scene feature extraction: each agent is summarized by a fixed-width vector
// combining its own motion history, lane geometry, and neighbor context.
//
// Pipeline: a causal dilated temporal convolution (dilations 1, 2, 4) over the
// observed displacement sequence in the agent's canonical frame, two
// message-passing rounds over the combined lane/agent graph, then single-head
// dot-product attention from each agent over every node in its scene, fused by
// a final linear projection to `width` channels.
//
// All geometry is expressed relative to per-node frames, so the features are
// invariant to rigid motions of the scene up to float rounding, and the
// internal node order is a pure function of sorted ids, so the output for an
// agent does not depend on the order agents or lanes were listed in.

struct FeatConfig {
  int width = 32;   // output channels per agent
  int hidden = 32;  // node embedding channels
  int conv = 16;    // temporal conv channels
};

// Relation kinds in message passing, in emission order.
constexpr int kNumRelations = 7;  // succ, pred, left, right, l2a, a2l, a2a

// Registers all extractor parameters (He-initialized from rng by name).
void feat_init(ParamStore& ps, Rng& rng, const FeatConfig& cfg);

// Precomputed batch structure shared by every tape built over the same
// scenarios. Output rows are scenario-major in each scenario's agent vector
// order; everything else is internal canonical (sorted-id) order.
struct FeatBatch {
  int n_scen = 0;
  int n_lanes = 0;   // total lane nodes
  int n_agents = 0;  // total agent nodes == output rows
  int nodes() const { return n_lanes + n_agents; }

  // Per output row.
  std::vector<int> scen_of;     // batch scenario index
  std::vector<int> agent_pos;   // index into that scenario's agents vector
  std::vector<Frame> frame;     // canonical frame used for this agent
  std::vector<int> out_order;   // output row -> internal agent ordinal

  // Internal canonical-order precomputation.
  Array disp;       // (n_agents * kObsSteps) x 2 displacement steps
  Array lane_desc;  // n_lanes x 4
  std::vector<int> edge_src[kNumRelations];
  std::vector<int> edge_dst[kNumRelations];
  Array edge_feat[kNumRelations];  // E x 6; empty relations left default
  std::vector<int> last_row;       // agent ordinal -> final conv output row
  std::vector<int> agent_node;     // agent ordinal -> node id
  std::vector<int> att_q, att_k;   // attention pairs: agent ordinal, node id
};

FeatBatch feat_batch_build(const std::vector<const Scenario*>& scens);

// Builds the extractor subgraph on the tape; returns the id of the
// (n_agents x width) feature array in output-row order.
int feat_extract(Tape& t, TapeParams& tp, const FeatBatch& b, const FeatConfig& cfg);

// Convenience: run a standalone float forward pass and return feature values.
Array feat_values(const FeatBatch& b, ParamStore& ps, const FeatConfig& cfg);

}  // namespace tae
