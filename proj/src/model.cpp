#include "tae/model.hpp"

#include <cmath>

namespace tae {
namespace {

constexpr float kProbFloor = 1e-7f;

// Block lower-triangular 0/1 matrix turning per-step displacements into
// positions: out[:, 2t+c] = sum_{u <= t} in[:, 2u+c].
Array cumsum_matrix(int horizon) {
  int n = 2 * horizon;
  Array m = Array::zeros({n, n});
  for (int t = 0; t < horizon; ++t)
    for (int u = 0; u <= t; ++u)
      for (int c = 0; c < 2; ++c) m.v[size_t(2 * u + c) * n + 2 * t + c] = 1.0f;
  return m;
}

// log of a probability node with the documented floor.
int safe_log(Tape& t, int p) { return t.log(t.clamp(p, kProbFloor, 1.0f)); }

int one_minus(Tape& t, int p) { return t.add_const(t.scale(p, -1.0f), 1.0f); }

const char* disc_prefix(int head) {
  switch (head) {
    case 0: return "disc.int";
    case 1: return "disc.agg";
    default: return "disc.gss";
  }
}

}  // namespace

void validate_latent(const LatentCode& z) {
  double s = 0;
  for (double p : z.intent) {
    check_numeric(std::isfinite(p) && p >= -1e-6, "latent: intent entry out of range");
    s += p;
  }
  check_numeric(std::abs(s - 1.0) <= 1e-6, "latent: intent does not sum to 1");
  check_numeric(std::isfinite(z.agg) && z.agg > 0, "latent: aggressiveness must be positive");
  for (double g : z.gauss) check_numeric(std::isfinite(g), "latent: non-finite residual");
}

void model_init(ParamStore& ps, Rng& rng, const ModelConfig& cfg) {
  feat_init(ps, rng, cfg.feat);
  const int D = cfg.feat.width, E = cfg.enc_hidden;
  ps.add_matrix("enc.trunk.w", D, E, rng);
  ps.add_bias("enc.trunk.b", E);
  const struct { const char* name; int out; } heads[] = {
      {"enc.int", 3}, {"enc.agg", 1}, {"enc.gss", 6}};
  for (const auto& h : heads) {
    std::string p = h.name;
    ps.add_matrix(p + ".w1", E, E, rng);
    ps.add_bias(p + ".b1", E);
    ps.add_matrix(p + ".w2", E, h.out, rng);
    ps.add_bias(p + ".b2", h.out);
  }
  const int DH = cfg.dec_hidden;
  ps.add_matrix("dec.w1", kLatentDim, DH, rng);
  ps.add_bias("dec.b1", DH);
  ps.add_matrix("dec.w2", DH, DH, rng);
  ps.add_bias("dec.b2", DH);
  ps.add_matrix("dec.w3", DH, 2 * cfg.horizon, rng);
  ps.add_bias("dec.b3", 2 * cfg.horizon);
  const int in_dim[3] = {3, 1, 6};
  for (int h = 0; h < 3; ++h) {
    std::string p = disc_prefix(h);
    ps.add_matrix(p + ".w1", in_dim[h], cfg.disc_hidden, rng);
    ps.add_bias(p + ".b1", cfg.disc_hidden);
    ps.add_matrix(p + ".w2", cfg.disc_hidden, 1, rng);
    ps.add_bias(p + ".b2", 1);
  }
  ps.add_matrix("cls.w1", D + 2 * cfg.horizon, cfg.cls_hidden, rng);
  ps.add_bias("cls.b1", cfg.cls_hidden);
  ps.add_matrix("cls.w2", cfg.cls_hidden, 1, rng);
  ps.add_bias("cls.b2", 1);
}

std::array<double, 3> prior_intent(const PriorConfig& pc, Rng& rng) {
  double u = rng.uniform();
  std::array<double, 3> z{0, 0, 0};
  double acc = 0;
  for (int c = 0; c < 3; ++c) {
    acc += pc.class_probs[c];
    if (u < acc || c == 2) {
      z[c] = 1.0;
      return z;
    }
  }
  return z;
}

double prior_agg(const PriorConfig& pc, Rng& rng) {
  return std::exp(pc.agg_mu + pc.agg_sigma * rng.normal());
}

std::array<double, 6> prior_gauss(Rng& rng) {
  std::array<double, 6> z;
  for (double& x : z) x = rng.normal();
  return z;
}

LatentCode sample_prior(const PriorConfig& pc, Rng& rng) {
  LatentCode z;
  z.intent = prior_intent(pc, rng);
  z.agg = prior_agg(pc, rng);
  z.gauss = prior_gauss(rng);
  return z;
}

EncoderNodes encode_build(Tape& t, TapeParams& tp, int feature, const ModelConfig& cfg,
                          bool frozen) {
  (void)cfg;
  auto P = [&](const std::string& n) { return frozen ? tp.frozen(n) : tp(n); };
  int h = t.relu(t.add_row(t.matmul(feature, P("enc.trunk.w")), P("enc.trunk.b")));
  auto head = [&](const std::string& p) {
    int hh = t.relu(t.add_row(t.matmul(h, P(p + ".w1")), P(p + ".b1")));
    return t.add_row(t.matmul(hh, P(p + ".w2")), P(p + ".b2"));
  };
  EncoderNodes e;
  e.intent = t.softmax_rows(head("enc.int"));
  e.log_agg = t.clamp(head("enc.agg"), -4.0f, 4.0f);
  e.agg = t.exp(e.log_agg);
  e.gauss = head("enc.gss");
  e.code = t.concat_cols(t.concat_cols(e.intent, e.log_agg), e.gauss);
  return e;
}

int decode_build(Tape& t, TapeParams& tp, int code, const ModelConfig& cfg, bool frozen) {
  auto P = [&](const std::string& n) { return frozen ? tp.frozen(n) : tp(n); };
  int h1 = t.relu(t.add_row(t.matmul(code, P("dec.w1")), P("dec.b1")));
  int h2 = t.relu(t.add_row(t.matmul(h1, P("dec.w2")), P("dec.b2")));
  int d = t.add_row(t.matmul(h2, P("dec.w3")), P("dec.b3"));
  return t.matmul(d, t.constant(cumsum_matrix(cfg.horizon), "cumsum"));
}

int disc_build(Tape& t, TapeParams& tp, int head, int input, const ModelConfig& cfg, bool frozen) {
  (void)cfg;
  auto P = [&](const std::string& n) { return frozen ? tp.frozen(n) : tp(n); };
  std::string p = disc_prefix(head);
  int h = t.relu(t.add_row(t.matmul(input, P(p + ".w1")), P(p + ".b1")));
  return t.sigmoid(t.add_row(t.matmul(h, P(p + ".w2")), P(p + ".b2")));
}

int classifier_build(Tape& t, TapeParams& tp, int input, int n_agents, int K,
                     const ModelConfig& cfg, bool frozen) {
  (void)cfg;
  auto P = [&](const std::string& n) { return frozen ? tp.frozen(n) : tp(n); };
  int h = t.relu(t.add_row(t.matmul(input, P("cls.w1")), P("cls.b1")));
  int s = t.add_row(t.matmul(h, P("cls.w2")), P("cls.b2"));
  return t.softmax_rows(t.reshape(s, n_agents, K));
}

int loss_pred_build(Tape& t, int pred, int target) {
  return t.mean_all(t.huber(t.sub(pred, target)));
}

int loss_adv_build(Tape& t, const std::array<int, 3>& disc_fake) {
  int acc = -1;
  for (int d : disc_fake) {
    int li = t.mean_all(safe_log(t, one_minus(t, d)));
    acc = acc < 0 ? li : t.add(acc, li);
  }
  return t.scale(acc, 1.0f / 3.0f);
}

int loss_disc_build(Tape& t, int disc_real, int disc_fake) {
  int lr = t.mean_all(safe_log(t, disc_real));
  int lf = t.mean_all(safe_log(t, one_minus(t, disc_fake)));
  return t.scale(t.add(lr, lf), -1.0f);
}

int loss_semi_build(Tape& t, const EncoderNodes& enc, const SemiBatch& sb) {
  check_data(!sb.empty(), "semi loss: no labeled rows in batch");
  int acc = -1;
  if (!sb.intent_rows.empty()) {
    int zi = t.gather_rows(enc.intent, sb.intent_rows);
    int ce = t.sum_all(t.mul(t.constant(sb.intent_onehot, "int_label"), safe_log(t, zi)));
    acc = t.scale(ce, -1.0f / float(sb.intent_rows.size()));
  }
  if (!sb.agg_rows.empty()) {
    int za = t.gather_rows(enc.agg, sb.agg_rows);
    int d = t.sub(za, t.constant(sb.agg_target, "agg_label"));
    int se = t.scale(t.sum_all(t.mul(d, d)), 1.0f / float(sb.agg_rows.size()));
    acc = acc < 0 ? se : t.add(acc, se);
  }
  return acc;
}

int loss_diversity_build(Tape& t, int trajs, int n_agents, int K, double sigma_d) {
  check_data(K >= 2, "diversity loss: K must be at least 2");
  std::vector<int> pi, pj;
  for (int a = 0; a < n_agents; ++a)
    for (int i = 0; i < K; ++i)
      for (int j = 0; j < K; ++j) {
        if (i == j) continue;
        pi.push_back(a * K + i);
        pj.push_back(a * K + j);
      }
  int d = t.sub(t.gather_rows(trajs, pi), t.gather_rows(trajs, pj));
  int cols = t.cols(trajs);
  int ones = t.constant({cols, 1}, std::vector<float>(size_t(cols), 1.0f), "ones");
  int d2 = t.matmul(t.mul(d, d), ones);
  return t.mean_all(t.exp(t.scale(d2, float(-1.0 / sigma_d))));
}

int loss_classifier_build(Tape& t, int scores, const Array& pos_onehot) {
  int n = pos_onehot.rows();
  int ce = t.sum_all(t.mul(t.constant(pos_onehot, "cls_label"), safe_log(t, scores)));
  return t.scale(ce, -1.0f / float(n));
}

std::vector<LatentCode> tae_encode(const FeatBatch& b, ParamStore& ps, const ModelConfig& cfg) {
  Tape t;
  TapeParams tp(t, ps);
  int f = feat_extract(t, tp, b, cfg.feat);
  EncoderNodes e = encode_build(t, tp, f, cfg);
  Exec<float> ex(t);
  ex.forward();
  const auto& zi = ex.value(e.intent);
  const auto& za = ex.value(e.agg);
  const auto& zg = ex.value(e.gauss);
  std::vector<LatentCode> out(size_t(b.n_agents));
  for (int a = 0; a < b.n_agents; ++a) {
    for (int c = 0; c < 3; ++c) out[a].intent[c] = zi[size_t(a) * 3 + c];
    out[a].agg = za[size_t(a)];
    for (int c = 0; c < 6; ++c) out[a].gauss[c] = zg[size_t(a) * 6 + c];
  }
  return out;
}

Array tae_decode(const std::vector<LatentCode>& codes, ParamStore& ps, const ModelConfig& cfg) {
  check_data(!codes.empty(), "decode: empty code batch");
  int n = int(codes.size());
  Array in = Array::zeros({n, kLatentDim});
  for (int a = 0; a < n; ++a) {
    validate_latent(codes[a]);
    float* row = &in.v[size_t(a) * kLatentDim];
    for (int c = 0; c < 3; ++c) row[c] = float(codes[a].intent[c]);
    row[3] = float(std::log(codes[a].agg));
    for (int c = 0; c < 6; ++c) row[4 + c] = float(codes[a].gauss[c]);
  }
  Tape t;
  TapeParams tp(t, ps);
  int traj = decode_build(t, tp, t.constant(in, "codes"), cfg);
  Exec<float> ex(t);
  ex.forward();
  return Array(t.shape(traj), ex.value(traj));
}

Array future_targets(const FeatBatch& b, const std::vector<const Scenario*>& scens, int horizon) {
  Array out = Array::zeros({b.n_agents, 2 * horizon});
  for (int r = 0; r < b.n_agents; ++r) {
    const Agent& a = scens[b.scen_of[r]]->agents[b.agent_pos[r]];
    check_data(int(a.fut.size()) == horizon,
               "future horizon mismatch: agent " + std::to_string(a.id) + " has " +
                   std::to_string(a.fut.size()) + " waypoints, model expects " +
                   std::to_string(horizon));
    for (int s = 0; s < horizon; ++s) {
      Pt p = b.frame[r].to_local(a.fut[s]);
      out.v[size_t(r) * 2 * horizon + 2 * s] = float(p.x);
      out.v[size_t(r) * 2 * horizon + 2 * s + 1] = float(p.y);
    }
  }
  return out;
}

std::vector<Pt> row_to_world(const Frame& f, const Array& a, int row) {
  int h = a.cols() / 2;
  std::vector<Pt> out;
  out.reserve(size_t(h));
  for (int s = 0; s < h; ++s)
    out.push_back(f.to_world({double(a.v[size_t(row) * a.cols() + 2 * s]),
                              double(a.v[size_t(row) * a.cols() + 2 * s + 1])}));
  return out;
}

std::vector<std::string> params_with_prefix(const ParamStore& ps, const std::string& prefix) {
  std::vector<std::string> out;
  for (const auto& [name, a] : ps)
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  return out;
}

}  // namespace tae
