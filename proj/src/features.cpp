#include "tae/features.hpp"

#include <cmath>
#include <string>
#include <utility>

namespace tae {

void feat_init(ParamStore& ps, Rng& rng, const FeatConfig& cfg) {
  const int C = cfg.conv, H = cfg.hidden;
  ps.add_matrix("feat.conv1.w", 6, C, rng);
  ps.add_bias("feat.conv1.b", C);
  ps.add_matrix("feat.conv2.w", 3 * C, C, rng);
  ps.add_bias("feat.conv2.b", C);
  ps.add_matrix("feat.conv3.w", 3 * C, C, rng);
  ps.add_bias("feat.conv3.b", C);
  ps.add_matrix("feat.agent.w", C, H, rng);
  ps.add_bias("feat.agent.b", H);
  ps.add_matrix("feat.lane.w", 4, H, rng);
  ps.add_bias("feat.lane.b", H);
  for (int r = 0; r < 2; ++r) {
    std::string p = "feat.mp" + std::to_string(r);
    ps.add_matrix(p + ".self", H, H, rng);
    for (int k = 0; k < kNumRelations; ++k)
      ps.add_matrix(p + ".rel" + std::to_string(k), H + 6, H, rng);
    ps.add_bias(p + ".b", H);
  }
  ps.add_matrix("feat.attn.q", H, H, rng);
  ps.add_matrix("feat.attn.k", H, H, rng);
  ps.add_matrix("feat.attn.v", H, H, rng);
  ps.add_matrix("feat.out.w", 2 * H, cfg.width, rng);
  ps.add_bias("feat.out.b", cfg.width);
}

FeatBatch feat_batch_build(const std::vector<const Scenario*>& scens) {
  FeatBatch b;
  b.n_scen = int(scens.size());
  check_data(b.n_scen > 0, "features: empty batch");

  std::vector<SceneGraph> graphs;
  std::vector<int> lane_off(b.n_scen), agent_off(b.n_scen);
  graphs.reserve(scens.size());
  for (int k = 0; k < b.n_scen; ++k) {
    graphs.push_back(graph_build(*scens[k]));
    lane_off[k] = b.n_lanes;
    agent_off[k] = b.n_agents;
    b.n_lanes += graphs.back().n_lanes;
    b.n_agents += graphs.back().n_agents;
  }
  check_data(b.n_agents > 0, "features: no agents in batch");

  // Graph-local node -> batch node (all lanes first, then all agents).
  auto gnode = [&](int k, int u) {
    const SceneGraph& g = graphs[k];
    return u < g.n_lanes ? lane_off[k] + u : b.n_lanes + agent_off[k] + (u - g.n_lanes);
  };

  b.disp = Array::zeros({b.n_agents * kObsSteps, 2});
  b.lane_desc = Array::zeros({b.n_lanes, 4});
  std::vector<float> efeat[kNumRelations];
  for (int k = 0; k < b.n_scen; ++k) {
    const Scenario& s = *scens[k];
    const SceneGraph& g = graphs[k];
    for (int i = 0; i < g.n_lanes; ++i)
      for (int c = 0; c < 4; ++c) b.lane_desc.v[size_t(lane_off[k] + i) * 4 + c] = float(g.lane_desc[i][c]);
    for (int j = 0; j < g.n_agents; ++j) {
      const Agent& a = s.agents[g.agent_pos[j]];
      const Frame& f = g.node_frame[g.n_lanes + j];
      int row0 = (agent_off[k] + j) * kObsSteps;
      Pt prev = f.to_local(a.obs[0]);
      for (int t = 1; t < kObsSteps; ++t) {
        Pt cur = f.to_local(a.obs[t]);
        b.disp.v[size_t(row0 + t) * 2 + 0] = float(cur.x - prev.x);
        b.disp.v[size_t(row0 + t) * 2 + 1] = float(cur.y - prev.y);
        prev = cur;
      }
    }
    const std::vector<GraphEdge>* rels[kNumRelations] = {&g.succ, &g.pred, &g.left, &g.right,
                                                         &g.l2a,  &g.a2l,  &g.a2a};
    for (int r = 0; r < kNumRelations; ++r)
      for (const GraphEdge& e : *rels[r]) {
        b.edge_src[r].push_back(gnode(k, e.src));
        b.edge_dst[r].push_back(gnode(k, e.dst));
        for (double x : e.feat) efeat[r].push_back(float(x));
      }
  }
  for (int r = 0; r < kNumRelations; ++r)
    if (!b.edge_src[r].empty())
      b.edge_feat[r] = Array({int(b.edge_src[r].size()), 6}, std::move(efeat[r]));

  for (int a = 0; a < b.n_agents; ++a) {
    b.last_row.push_back(a * kObsSteps + kObsSteps - 1);
    b.agent_node.push_back(b.n_lanes + a);
  }
  for (int k = 0; k < b.n_scen; ++k) {
    const SceneGraph& g = graphs[k];
    for (int j = 0; j < g.n_agents; ++j) {
      int a = agent_off[k] + j;
      for (int u = 0; u < g.nodes(); ++u) {
        b.att_q.push_back(a);
        b.att_k.push_back(gnode(k, u));
      }
    }
  }

  // Output rows follow each scenario's agent vector order.
  for (int k = 0; k < b.n_scen; ++k) {
    const SceneGraph& g = graphs[k];
    std::vector<int> inv(scens[k]->agents.size());
    for (int j = 0; j < g.n_agents; ++j) inv[g.agent_pos[j]] = j;
    for (size_t i = 0; i < scens[k]->agents.size(); ++i) {
      b.scen_of.push_back(k);
      b.agent_pos.push_back(int(i));
      b.frame.push_back(g.node_frame[g.n_lanes + inv[i]]);
      b.out_order.push_back(agent_off[k] + inv[i]);
    }
  }
  return b;
}

int feat_extract(Tape& t, TapeParams& tp, const FeatBatch& b, const FeatConfig& cfg) {
  const int C = cfg.conv, H = cfg.hidden;
  const int T = kObsSteps;

  // Causal dilated temporal convolution via a shared zero pad row: tap u < 0
  // reads row 0 of the padded input, everything else shifts by one.
  int x = t.constant(b.disp, "disp");
  const int dil[3] = {1, 2, 4};
  const char* cname[3] = {"feat.conv1", "feat.conv2", "feat.conv3"};
  for (int l = 0; l < 3; ++l) {
    int pad = t.concat_rows(t.zeros(1, l == 0 ? 2 : C), x);
    int taps = -1;
    for (int j = 0; j < 3; ++j) {
      std::vector<int> idx(size_t(b.n_agents) * T);
      for (int a = 0; a < b.n_agents; ++a)
        for (int s = 0; s < T; ++s) {
          int u = s - (2 - j) * dil[l];
          idx[size_t(a) * T + s] = u < 0 ? 0 : 1 + a * T + u;
        }
      int g = t.gather_rows(pad, std::move(idx));
      taps = j == 0 ? g : t.concat_cols(taps, g);
    }
    std::string n = cname[l];
    x = t.relu(t.add_row(t.matmul(taps, tp(n + ".w")), tp(n + ".b")));
  }
  int track = t.gather_rows(x, b.last_row);  // (A, C)

  int h_lane = t.relu(t.add_row(t.matmul(t.constant(b.lane_desc, "lane_desc"), tp("feat.lane.w")),
                                tp("feat.lane.b")));
  int h_agent = t.relu(t.add_row(t.matmul(track, tp("feat.agent.w")), tp("feat.agent.b")));
  int h = t.concat_rows(h_lane, h_agent);  // (N, H)

  int ef[kNumRelations];
  for (int r = 0; r < kNumRelations; ++r)
    ef[r] = b.edge_src[r].empty() ? -1 : t.constant(b.edge_feat[r], "edge_feat" + std::to_string(r));

  for (int round = 0; round < 2; ++round) {
    std::string p = "feat.mp" + std::to_string(round);
    int acc = t.matmul(h, tp(p + ".self"));
    for (int r = 0; r < kNumRelations; ++r) {
      if (ef[r] < 0) continue;
      int msg = t.matmul(t.concat_cols(t.gather_rows(h, b.edge_src[r]), ef[r]),
                         tp(p + ".rel" + std::to_string(r)));
      acc = t.add(acc, t.scatter_add_rows(msg, b.edge_dst[r], b.nodes()));
    }
    h = t.relu(t.add_row(acc, tp(p + ".b")));
  }

  // Single-head dot-product attention from each agent over its scene.
  int hq = t.gather_rows(h, b.agent_node);  // (A, H)
  int q = t.matmul(hq, tp("feat.attn.q"));
  int kmat = t.matmul(h, tp("feat.attn.k"));
  int v = t.matmul(h, tp("feat.attn.v"));
  int ones = t.constant({H, 1}, std::vector<float>(size_t(H), 1.0f), "ones");
  int sc = t.scale(t.matmul(t.mul(t.gather_rows(q, b.att_q), t.gather_rows(kmat, b.att_k)), ones),
                   1.0f / std::sqrt(float(H)));
  int alpha = t.segment_softmax(sc, b.att_q, b.n_agents);
  int ctx = t.scatter_add_rows(t.mul_col(t.gather_rows(v, b.att_k), alpha), b.att_q, b.n_agents);

  int fused = t.add_row(t.matmul(t.concat_cols(hq, ctx), tp("feat.out.w")), tp("feat.out.b"));
  return t.gather_rows(fused, b.out_order);
}

Array feat_values(const FeatBatch& b, ParamStore& ps, const FeatConfig& cfg) {
  Tape t;
  TapeParams tp(t, ps);
  int f = feat_extract(t, tp, b, cfg);
  Exec<float> ex(t);
  ex.forward();
  return Array(t.shape(f), ex.value(f));
}

}  // namespace tae
