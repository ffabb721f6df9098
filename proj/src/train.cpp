#include "tae/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "tae/features.hpp"

namespace tae {
namespace {

// Quartiles of the headway prior in log space.
constexpr double kQuartile = 0.6744897501960817;

SemiBatch build_semi(const FeatBatch& fb, const std::vector<const Scenario*>& scens,
                     bool oversample, int target_rows) {
  SemiBatch sb;
  std::vector<float> oh, tg;
  for (int r = 0; r < fb.n_agents; ++r) {
    const Agent& a = scens[fb.scen_of[r]]->agents[fb.agent_pos[r]];
    if (a.label.intent) {
      sb.intent_rows.push_back(r);
      for (int c = 0; c < 3; ++c) oh.push_back(c == int(*a.label.intent) ? 1.0f : 0.0f);
    }
    if (a.label.headway) {
      sb.agg_rows.push_back(r);
      tg.push_back(float(*a.label.headway));
    }
  }
  if (oversample) {
    auto repeat = [target_rows](std::vector<int>& rows, std::vector<float>& vals, int stride) {
      int base = int(rows.size());
      for (int i = base; base > 0 && i < target_rows; ++i) {
        rows.push_back(rows[i % base]);
        for (int c = 0; c < stride; ++c) vals.push_back(vals[size_t(i % base) * stride + c]);
      }
    };
    repeat(sb.intent_rows, oh, 3);
    repeat(sb.agg_rows, tg, 1);
  }
  if (!sb.intent_rows.empty())
    sb.intent_onehot = Array({int(sb.intent_rows.size()), 3}, std::move(oh));
  if (!sb.agg_rows.empty()) sb.agg_target = Array({int(sb.agg_rows.size()), 1}, std::move(tg));
  return sb;
}

// Tags any numeric failure inside a phase (parameter binding, forward, loss,
// backward, or the optimizer step) with where training stood.
template <class F>
auto run_phase(const char* phase, int epoch, int batch, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const NumericError& e) {
    throw NumericError(std::string(e.what()) + " [" + phase + " phase, epoch " +
                       std::to_string(epoch) + ", batch " + std::to_string(batch) + "]");
  }
}

// Forward, loss check, backward, optional clip, Adam step over every bound
// parameter that received a gradient.
double apply_update(const Tape& t, const TapeParams& tp, int loss, ParamStore& params,
                    AdamState& opt, float grad_clip) {
  Exec<float> ex(t);
  ex.forward();
  double lv = ex.scalar(loss);
  check_numeric(std::isfinite(lv), "train: non-finite loss");
  Grads<float> gr(t, ex);
  gr.run(loss);
  std::vector<std::pair<std::string, Array*>> ps;
  std::vector<const std::vector<float>*> gs;
  for (const auto& [name, id] : tp.bound()) {
    if (!gr.has_grad(id)) continue;
    ps.emplace_back(name, &params.get(name));
    gs.push_back(&gr.grad(id));
  }
  std::vector<std::vector<float>> clipped;
  if (grad_clip > 0) {
    double norm2 = 0;
    for (const auto* g : gs)
      for (float x : *g) norm2 += double(x) * x;
    if (norm2 > double(grad_clip) * grad_clip) {
      float s = float(grad_clip / std::sqrt(norm2));
      clipped.reserve(gs.size());
      for (auto& g : gs) {
        clipped.push_back(*g);
        for (float& x : clipped.back()) x *= s;
        g = &clipped.back();
      }
    }
  }
  opt.update(ps, gs);
  return lv;
}

std::vector<const Scenario*> batch_ptrs(const std::vector<Scenario>& data,
                                        const std::vector<int>& order, int batch, int bsz) {
  std::vector<const Scenario*> ptrs;
  int n = int(data.size());
  for (int i = batch * bsz; i < std::min(n, (batch + 1) * bsz); ++i)
    ptrs.push_back(&data[order[i]]);
  return ptrs;
}

std::vector<int> epoch_order(int n, const Rng& root, const char* label, int epoch) {
  std::vector<int> order(static_cast<size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  Rng sh = root.derive(label).derive(uint64_t(epoch));
  sh.shuffle(order);
  return order;
}

}  // namespace

Checkpoint train_init(const ModelConfig& mc, const TrainConfig& tc) {
  check_data(tc.batch >= 1, "train: batch size must be at least 1");
  check_data(tc.epochs >= 0 && tc.div_epochs >= 0, "train: negative epoch count");
  check_data(tc.lr_pred > 0 && tc.lr_adv > 0 && tc.lr_disc > 0 && tc.lr_semi > 0,
             "train: learning rates must be positive");
  check_data(mc.prior.K >= 2, "train: diverse candidate count K must be at least 2");
  Checkpoint ck;
  ck.train = tc;
  ck.model = mc;
  Rng init = Rng(tc.seed).derive("init");
  model_init(ck.params, init, mc);
  ck.opt_pred = AdamState({tc.lr_pred, 0.9f, 0.999f, 1e-8f});
  ck.opt_adv = AdamState({tc.lr_adv, 0.9f, 0.999f, 1e-8f});
  ck.opt_disc = AdamState({tc.lr_disc, 0.9f, 0.999f, 1e-8f});
  ck.opt_semi = AdamState({tc.lr_semi, 0.9f, 0.999f, 1e-8f});
  ck.opt_cls = AdamState({tc.lr_pred, 0.9f, 0.999f, 1e-8f});
  Rng root(tc.seed);
  ck.rng_key = root.key();
  ck.rng_counter = root.counter();
  return ck;
}

void train_main(Checkpoint& ck, const std::vector<Scenario>& data, std::vector<LossRow>* log) {
  check_data(!data.empty(), "train: empty dataset");
  const TrainConfig& tc = ck.train;
  const ModelConfig& mc = ck.model;
  Rng root(tc.seed);
  const int n = int(data.size());
  const int n_batches = (n + tc.batch - 1) / tc.batch;
  for (int epoch = ck.epoch; epoch < tc.epochs; ++epoch) {
    std::vector<int> order = epoch_order(n, root, "shuffle", epoch);
    for (int b = 0; b < n_batches; ++b) {
      std::vector<const Scenario*> ptrs = batch_ptrs(data, order, b, tc.batch);
      FeatBatch fb = feat_batch_build(ptrs);
      Array fvals =
          run_phase("feature", epoch, b, [&] { return feat_values(fb, ck.params, mc.feat); });
      Array targets = future_targets(fb, ptrs, mc.horizon);
      SemiBatch sb = build_semi(fb, ptrs, tc.oversample_labeled, fb.n_agents);
      Rng prng = root.derive("prior").derive(uint64_t(epoch)).derive(uint64_t(b));
      const int A = fb.n_agents;

      // Encoder fools the frozen discriminators.
      double ladv = run_phase("adversarial", epoch, b, [&] {
        Tape t;
        TapeParams tp(t, ck.params);
        EncoderNodes e = encode_build(t, tp, t.constant(fvals, "f"), mc);
        std::array<int, 3> fake = {disc_build(t, tp, 0, e.intent, mc, true),
                                   disc_build(t, tp, 1, e.log_agg, mc, true),
                                   disc_build(t, tp, 2, e.gauss, mc, true)};
        return apply_update(t, tp, loss_adv_build(t, fake), ck.params, ck.opt_adv, tc.grad_clip);
      });
      // Discriminators separate fresh prior draws from frozen-encoder codes.
      double ldisc = run_phase("discriminator", epoch, b, [&] {
        Tape t;
        TapeParams tp(t, ck.params);
        EncoderNodes e = encode_build(t, tp, t.constant(fvals, "f"), mc, true);
        Array ri = Array::zeros({A, 3}), ra = Array::zeros({A, 1}), rg = Array::zeros({A, 6});
        for (int a = 0; a < A; ++a) {
          auto oh = prior_intent(mc.prior, prng);
          for (int c = 0; c < 3; ++c) ri.v[size_t(a) * 3 + c] = float(oh[c]);
          ra.v[size_t(a)] = float(prng.normal(mc.prior.agg_mu, mc.prior.agg_sigma));
          auto g = prior_gauss(prng);
          for (int c = 0; c < 6; ++c) rg.v[size_t(a) * 6 + c] = float(g[c]);
        }
        int l0 = loss_disc_build(t, disc_build(t, tp, 0, t.constant(ri, "ri"), mc),
                                 disc_build(t, tp, 0, e.intent, mc));
        int l1 = loss_disc_build(t, disc_build(t, tp, 1, t.constant(ra, "ra"), mc),
                                 disc_build(t, tp, 1, e.log_agg, mc));
        int l2 = loss_disc_build(t, disc_build(t, tp, 2, t.constant(rg, "rg"), mc),
                                 disc_build(t, tp, 2, e.gauss, mc));
        int loss = t.scale(t.add(t.add(l0, l1), l2), 1.0f / 3.0f);
        return apply_update(t, tp, loss, ck.params, ck.opt_disc, tc.grad_clip);
      });
      // Semi-supervised anchoring on whatever labeled rows fell in the batch.
      double lsemi = 0.0;
      if (!sb.empty()) {
        lsemi = run_phase("semi-supervised", epoch, b, [&] {
          Tape t;
          TapeParams tp(t, ck.params);
          EncoderNodes e = encode_build(t, tp, t.constant(fvals, "f"), mc);
          return apply_update(t, tp, loss_semi_build(t, e, sb), ck.params, ck.opt_semi,
                              tc.grad_clip);
        });
      }
      // Joint reconstruction through extractor, encoder, and decoder.
      double lpred = run_phase("prediction", epoch, b, [&] {
        Tape t;
        TapeParams tp(t, ck.params);
        int f = feat_extract(t, tp, fb, mc.feat);
        EncoderNodes e = encode_build(t, tp, f, mc);
        int traj = decode_build(t, tp, e.code, mc);
        return apply_update(t, tp, loss_pred_build(t, traj, t.constant(targets, "y")), ck.params,
                            ck.opt_pred, tc.grad_clip);
      });
      if (log) {
        log->push_back({epoch, b, "adv", ladv});
        log->push_back({epoch, b, "disc", ldisc});
        log->push_back({epoch, b, "semi", lsemi});
        log->push_back({epoch, b, "pred", lpred});
      }
    }
    ck.epoch = epoch + 1;
  }
}

std::vector<LatentCode> diverse_codes(const LatentCode& base, const PriorConfig& pc) {
  std::vector<LatentCode> out;
  out.reserve(size_t(pc.K));
  for (int k = 0; k < pc.K; ++k) {
    LatentCode z = base;
    z.intent = {0, 0, 0};
    z.intent[size_t(k % 3)] = 1.0;
    z.agg = std::exp(pc.agg_mu + ((k / 3) % 2 == 0 ? -1.0 : 1.0) * kQuartile * pc.agg_sigma);
    out.push_back(z);
  }
  return out;
}

void train_diversity(Checkpoint& ck, const std::vector<Scenario>& data,
                     std::vector<LossRow>* log) {
  check_data(!data.empty(), "train: empty dataset");
  check_data(ck.epoch >= ck.train.epochs,
             "train: diversity stage requires the main stage to have finished");
  const TrainConfig& tc = ck.train;
  const ModelConfig& mc = ck.model;
  const int K = mc.prior.K;
  const int H2 = 2 * mc.horizon;
  Rng root(tc.seed);
  const int n = int(data.size());
  const int n_batches = (n + tc.batch - 1) / tc.batch;
  for (int de = ck.div_epoch; de < tc.div_epochs; ++de) {
    const int epoch_label = tc.epochs + de;
    std::vector<int> order = epoch_order(n, root, "div-shuffle", de);
    for (int b = 0; b < n_batches; ++b) {
      std::vector<const Scenario*> ptrs = batch_ptrs(data, order, b, tc.batch);
      FeatBatch fb = feat_batch_build(ptrs);
      Array targets = future_targets(fb, ptrs, mc.horizon);
      const int A = fb.n_agents;

      const int D = mc.feat.width;
      Array cin = Array::zeros({A * K, D + H2});
      Array onehot = Array::zeros({A, K});
      double lv = run_phase("diversity", epoch_label, b, [&] {
        Tape t;
        TapeParams tp(t, ck.params);
        int f = feat_extract(t, tp, fb, mc.feat);
        EncoderNodes e = encode_build(t, tp, f, mc);
        int rec = decode_build(t, tp, e.code, mc);
        int lp = loss_pred_build(t, rec, t.constant(targets, "y"));

        // K behavior-conditioned codes per agent: forced intent and headway
        // quartile, the agent's own residual. Stacked agent-major for the
        // pairwise loss.
        int stacked = -1;
        for (int k = 0; k < K; ++k) {
          Array oh = Array::zeros({A, 3});
          for (int a = 0; a < A; ++a) oh.v[size_t(a) * 3 + k % 3] = 1.0f;
          double la =
              mc.prior.agg_mu + ((k / 3) % 2 == 0 ? -1.0 : 1.0) * kQuartile * mc.prior.agg_sigma;
          int code_k = t.concat_cols(t.concat_cols(t.constant(oh, "oh"),
                                                   t.constant(Array::full({A, 1}, float(la)), "la")),
                                     e.gauss);
          stacked = k == 0 ? code_k : t.concat_rows(stacked, code_k);
        }
        std::vector<int> reorder(size_t(A) * K);
        for (int a = 0; a < A; ++a)
          for (int k = 0; k < K; ++k) reorder[size_t(a) * K + k] = k * A + a;
        int trajs = decode_build(t, tp, t.gather_rows(stacked, reorder), mc);
        int ldiv = loss_diversity_build(t, trajs, A, K, mc.prior.sigma_d);
        int loss = t.add(lp, t.scale(ldiv, tc.lambda_d));

        Exec<float> ex(t);
        ex.forward();
        double total = ex.scalar(loss);
        check_numeric(std::isfinite(total), "train: non-finite loss");
        Grads<float> gr(t, ex);
        gr.run(loss);
        std::vector<std::pair<std::string, Array*>> ps;
        std::vector<const std::vector<float>*> gs;
        for (const auto& [name, id] : tp.bound()) {
          if (!gr.has_grad(id)) continue;
          ps.emplace_back(name, &ck.params.get(name));
          gs.push_back(&gr.grad(id));
        }
        ck.opt_pred.update(ps, gs);

        // Classifier inputs from the detached candidates: positive = lowest
        // final displacement error, ties to the lowest index.
        const auto& tv = ex.value(trajs);
        const auto& fv = ex.value(f);
        for (int a = 0; a < A; ++a) {
          int best = 0;
          double best_fde = 1e300;
          for (int k = 0; k < K; ++k) {
            float* row = &cin.v[size_t(a * K + k) * (D + H2)];
            for (int c = 0; c < D; ++c) row[c] = fv[size_t(a) * D + c];
            for (int c = 0; c < H2; ++c) row[D + c] = tv[size_t(a * K + k) * H2 + c];
            double dx = double(tv[size_t(a * K + k) * H2 + H2 - 2]) -
                        double(targets.v[size_t(a) * H2 + H2 - 2]);
            double dy = double(tv[size_t(a * K + k) * H2 + H2 - 1]) -
                        double(targets.v[size_t(a) * H2 + H2 - 1]);
            double fde = std::sqrt(dx * dx + dy * dy);
            if (fde < best_fde) {
              best_fde = fde;
              best = k;
            }
          }
          onehot.v[size_t(a) * K + best] = 1.0f;
        }
        return total;
      });
      double lc = run_phase("classifier", epoch_label, b, [&] {
        Tape ct;
        TapeParams ctp(ct, ck.params);
        int sc = classifier_build(ct, ctp, ct.constant(cin, "cin"), A, K, mc);
        return apply_update(ct, ctp, loss_classifier_build(ct, sc, onehot), ck.params, ck.opt_cls,
                            tc.grad_clip);
      });
      if (log) {
        log->push_back({epoch_label, b, "div", lv});
        log->push_back({epoch_label, b, "cls", lc});
      }
    }
    ck.div_epoch = de + 1;
  }
}

}  // namespace tae
