#include "tae/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "json.hpp"
#include "tae/hash.hpp"

namespace tae {
namespace {

constexpr double kTwoPi = 6.283185307179586;

void check_same_shape(const Array& pred, const Array& truth) {
  check_data(pred.shape == truth.shape, "displacement: shape mismatch");
  check_data(pred.shape[0] > 0, "displacement: empty trajectory set");
  check_data(pred.shape[1] >= 2 && pred.shape[1] % 2 == 0,
             "displacement: rows must hold xy pairs");
}

double row_step_dist(const float* p, const float* q, int t) {
  double dx = double(p[2 * t]) - double(q[2 * t]);
  double dy = double(p[2 * t + 1]) - double(q[2 * t + 1]);
  return std::sqrt(dx * dx + dy * dy);
}

}  // namespace

std::vector<double> per_row_ade(const Array& pred, const Array& truth) {
  check_same_shape(pred, truth);
  int rows = pred.shape[0], steps = pred.shape[1] / 2;
  std::vector<double> out(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r) {
    const float* p = &pred.v[size_t(r) * pred.shape[1]];
    const float* q = &truth.v[size_t(r) * pred.shape[1]];
    double s = 0;
    for (int t = 0; t < steps; ++t) s += row_step_dist(p, q, t);
    out[size_t(r)] = s / steps;
  }
  return out;
}

std::vector<double> per_row_fde(const Array& pred, const Array& truth) {
  check_same_shape(pred, truth);
  int rows = pred.shape[0], steps = pred.shape[1] / 2;
  std::vector<double> out(static_cast<size_t>(rows));
  for (int r = 0; r < rows; ++r)
    out[size_t(r)] = row_step_dist(&pred.v[size_t(r) * pred.shape[1]],
                                   &truth.v[size_t(r) * pred.shape[1]], steps - 1);
  return out;
}

DisplacementStats displacement_metrics(const Array& pred, const Array& truth) {
  auto ades = per_row_ade(pred, truth);
  auto fdes = per_row_fde(pred, truth);
  DisplacementStats s;
  for (size_t r = 0; r < ades.size(); ++r) {
    s.ade += ades[r];
    s.fde += fdes[r];
  }
  s.ade /= double(ades.size());
  s.fde /= double(fdes.size());
  return s;
}

DisplacementStats min_displacement_metrics(const Array& cands, const Array& truth, int K) {
  check_data(K >= 1, "displacement: K must be positive");
  check_data(cands.shape[0] == truth.shape[0] * K, "displacement: candidate count mismatch");
  int A = truth.shape[0], cols = truth.shape[1];
  check_data(cands.shape[1] == cols, "displacement: horizon mismatch");
  int steps = cols / 2;
  DisplacementStats s;
  for (int a = 0; a < A; ++a) {
    const float* q = &truth.v[size_t(a) * cols];
    double best_ade = 1e300, best_fde = 1e300;
    for (int k = 0; k < K; ++k) {
      const float* p = &cands.v[size_t(a * K + k) * cols];
      double acc = 0;
      for (int t = 0; t < steps; ++t) acc += row_step_dist(p, q, t);
      best_ade = std::min(best_ade, acc / steps);
      best_fde = std::min(best_fde, row_step_dist(p, q, steps - 1));
    }
    s.ade += best_ade;
    s.fde += best_fde;
  }
  s.ade /= A;
  s.fde /= A;
  return s;
}

BehaviorReport behavior_metrics(const std::vector<LatentCode>& codes,
                                const std::vector<BehaviorLabel>& truth) {
  check_data(codes.size() == truth.size(), "behavior: code/truth length mismatch");
  BehaviorReport rep;
  double hsum = 0;
  for (size_t r = 0; r < codes.size(); ++r) {
    if (truth[r].intent) {
      int am = 0;
      for (int c = 1; c < 3; ++c)
        if (codes[r].intent[size_t(c)] > codes[r].intent[size_t(am)]) am = c;
      rep.intent_accuracy += am == int(*truth[r].intent);
      ++rep.intent_rows;
    }
    if (truth[r].headway) {
      double d = codes[r].agg - *truth[r].headway;
      rep.agg_mse += d * d;
      hsum += *truth[r].headway;
      ++rep.agg_rows;
    }
  }
  if (rep.intent_rows) rep.intent_accuracy /= rep.intent_rows;
  if (rep.agg_rows) {
    rep.agg_mse /= rep.agg_rows;
    double mean = hsum / rep.agg_rows;
    for (size_t r = 0; r < codes.size(); ++r)
      if (truth[r].headway) {
        double d = *truth[r].headway - mean;
        rep.mean_baseline_mse += d * d;
      }
    rep.mean_baseline_mse /= rep.agg_rows;
  }
  return rep;
}

std::vector<BehaviorLabel> hidden_truth(const FeatBatch& b,
                                        const std::vector<const Scenario*>& scens) {
  std::vector<BehaviorLabel> out(static_cast<size_t>(b.n_agents));
  for (int r = 0; r < b.n_agents; ++r) {
    const Scenario& s = *scens[size_t(b.scen_of[size_t(r)])];
    const Agent& a = s.agents[size_t(b.agent_pos[size_t(r)])];
    if (!a.hidden) continue;
    out[size_t(r)].intent = a.hidden->intent;
    if (a.hidden->headway > 0 && compute_headway(s, a.id))
      out[size_t(r)].headway = a.hidden->headway;
  }
  return out;
}

std::vector<BehaviorLabel> revealed_truth(const FeatBatch& b,
                                          const std::vector<const Scenario*>& scens) {
  std::vector<BehaviorLabel> out(static_cast<size_t>(b.n_agents));
  for (int r = 0; r < b.n_agents; ++r)
    out[size_t(r)] =
        scens[size_t(b.scen_of[size_t(r)])]->agents[size_t(b.agent_pos[size_t(r)])].label;
  return out;
}

std::vector<Pt> constant_velocity_traj(const Agent& a, int horizon) {
  check_data(a.obs.size() >= 2, "baseline: needs at least two observed points");
  check_data(horizon >= 1, "baseline: empty horizon");
  Pt last = a.obs.back();
  Pt v = last - a.obs[a.obs.size() - 2];
  std::vector<Pt> out(static_cast<size_t>(horizon));
  for (int t = 0; t < horizon; ++t) out[size_t(t)] = last + double(t + 1) * v;
  return out;
}

Array constant_velocity_targets(const FeatBatch& b, const std::vector<const Scenario*>& scens,
                                int horizon) {
  Array out = Array::zeros({b.n_agents, 2 * horizon});
  for (int r = 0; r < b.n_agents; ++r) {
    const Agent& a =
        scens[size_t(b.scen_of[size_t(r)])]->agents[size_t(b.agent_pos[size_t(r)])];
    auto pts = constant_velocity_traj(a, horizon);
    const Frame& f = b.frame[size_t(r)];
    for (int t = 0; t < horizon; ++t) {
      Pt l = f.to_local(pts[size_t(t)]);
      out.v[size_t(r) * 2 * horizon + 2 * t] = float(l.x);
      out.v[size_t(r) * 2 * horizon + 2 * t + 1] = float(l.y);
    }
  }
  return out;
}

double ks_statistic_normal(std::vector<double> xs, double mu, double sigma) {
  check_data(!xs.empty() && sigma > 0, "ks: empty sample or non-positive sigma");
  std::sort(xs.begin(), xs.end());
  const double n = double(xs.size());
  double d = 0;
  for (size_t i = 0; i < xs.size(); ++i) {
    double f = 0.5 * std::erfc(-(xs[i] - mu) / (sigma * std::sqrt(2.0)));
    d = std::max(d, std::max(std::abs(f - double(i) / n), std::abs(f - double(i + 1) / n)));
  }
  return d;
}

LatentStats latent_stats(const std::vector<LatentCode>& codes, const PriorConfig& pc) {
  check_data(!codes.empty(), "latent stats: empty code list");
  LatentStats st;
  const double n = double(codes.size());
  std::vector<double> la;
  la.reserve(codes.size());
  for (const auto& c : codes) {
    for (int d = 0; d < 6; ++d) st.gauss_mean[size_t(d)] += c.gauss[size_t(d)];
    for (int k = 0; k < 3; ++k) st.intent_mean[size_t(k)] += c.intent[size_t(k)];
    la.push_back(std::log(c.agg));
  }
  for (int d = 0; d < 6; ++d) st.gauss_mean[size_t(d)] /= n;
  for (int k = 0; k < 3; ++k) st.intent_mean[size_t(k)] /= n;
  for (const auto& c : codes)
    for (int d = 0; d < 6; ++d) {
      double dev = c.gauss[size_t(d)] - st.gauss_mean[size_t(d)];
      st.gauss_std[size_t(d)] += dev * dev;
    }
  for (int d = 0; d < 6; ++d) st.gauss_std[size_t(d)] = std::sqrt(st.gauss_std[size_t(d)] / n);
  st.agg_log_ks = ks_statistic_normal(la, pc.agg_mu, pc.agg_sigma);
  return st;
}

// ---- headway fitting -------------------------------------------------------

namespace {

constexpr int kBins = 50;
constexpr double kHistLo = 0.0, kHistHi = 10.0;
constexpr double kBinW = (kHistHi - kHistLo) / kBins;

double lognormal_pdf(double x, double mu, double sigma) {
  double z = (std::log(x) - mu) / sigma;
  return std::exp(-0.5 * z * z) / (x * sigma * std::sqrt(kTwoPi));
}
double normal_pdf(double x, double mu, double sigma) {
  double z = (x - mu) / sigma;
  return std::exp(-0.5 * z * z) / (sigma * std::sqrt(kTwoPi));
}
double gamma_pdf(double x, double shape, double scale) {
  return std::exp((shape - 1) * std::log(x) - x / scale - std::lgamma(shape) -
                  shape * std::log(scale));
}

template <class Pdf>
void score_fit(DistributionFit& f, const std::vector<double>& pmass, Pdf&& pdf) {
  std::array<double, kBins> q{};
  double qsum = 0;
  for (int i = 0; i < kBins; ++i) {
    double center = kHistLo + (i + 0.5) * kBinW;
    q[size_t(i)] = pdf(center);
    qsum += q[size_t(i)];
  }
  check_numeric(qsum > 0 && std::isfinite(qsum), "fit: degenerate density");
  f.kl = 0;
  f.sse = 0;
  for (int i = 0; i < kBins; ++i) {
    double p = pmass[size_t(i)];
    double qn = std::max(q[size_t(i)] / qsum, 1e-12);
    if (p > 0) f.kl += p * std::log(p / qn);
    double dens = p / kBinW;
    double d = dens - q[size_t(i)];
    f.sse += d * d;
  }
}

}  // namespace

HeadwayFit fit_headway(const std::vector<double>& samples) {
  check_data(samples.size() >= 100,
             "fit: needs at least 100 samples, got " + std::to_string(samples.size()));
  for (double s : samples)
    check_data(s > 0, "fit: non-positive sample " + std::to_string(s));
  const double n = double(samples.size());

  double mean = 0, lmean = 0;
  for (double s : samples) {
    mean += s;
    lmean += std::log(s);
  }
  mean /= n;
  lmean /= n;
  double var = 0, lvar = 0;
  for (double s : samples) {
    var += (s - mean) * (s - mean);
    double d = std::log(s) - lmean;
    lvar += d * d;
  }
  var = std::max(var / n, 1e-12);
  lvar = std::max(lvar / n, 1e-12);

  std::vector<double> pmass(kBins, 0.0);
  for (double s : samples) {
    int b = int((s - kHistLo) / kBinW);
    b = std::min(kBins - 1, std::max(0, b));
    pmass[size_t(b)] += 1.0 / n;
  }

  HeadwayFit fit;
  fit.lognormal.family = "log-normal";
  fit.lognormal.p1 = lmean;
  fit.lognormal.p2 = std::sqrt(lvar);
  score_fit(fit.lognormal, pmass,
            [&](double x) { return lognormal_pdf(x, fit.lognormal.p1, fit.lognormal.p2); });

  fit.normal.family = "normal";
  fit.normal.p1 = mean;
  fit.normal.p2 = std::sqrt(var);
  score_fit(fit.normal, pmass, [&](double x) { return normal_pdf(x, fit.normal.p1, fit.normal.p2); });

  fit.gamma.family = "gamma";
  fit.gamma.p1 = mean * mean / var;   // shape
  fit.gamma.p2 = var / mean;          // scale
  score_fit(fit.gamma, pmass, [&](double x) { return gamma_pdf(x, fit.gamma.p1, fit.gamma.p2); });

  fit.best = fit.lognormal.family;
  double best = fit.lognormal.kl;
  if (fit.normal.kl < best) {
    best = fit.normal.kl;
    fit.best = fit.normal.family;
  }
  if (fit.gamma.kl < best) fit.best = fit.gamma.family;
  return fit;
}

// ---- modes ------------------------------------------------------------------

const char* mode_name(GenMode m) {
  switch (m) {
    case GenMode::most_likely: return "most-likely";
    case GenMode::aggressive: return "aggressive";
    case GenMode::conservative: return "conservative";
    case GenMode::left: return "left";
    case GenMode::right: return "right";
    case GenMode::forward: return "forward";
  }
  throw DataError("unknown generation mode");
}

GenMode mode_from_name(const std::string& s) {
  for (int m = 0; m < kNumModes; ++m)
    if (s == mode_name(GenMode(m))) return GenMode(m);
  throw UsageError("unknown generation mode '" + s + "'");
}

LatentCode apply_mode(const LatentCode& base, GenMode m, double agg_offset) {
  LatentCode z = base;
  switch (m) {
    case GenMode::most_likely: break;
    case GenMode::aggressive:
      // A zero offset is the identity; the floor only engages for real shifts.
      if (agg_offset != 0) z.agg = std::max(z.agg - agg_offset, 0.05);
      break;
    case GenMode::conservative: z.agg = z.agg + agg_offset; break;
    case GenMode::left: z.intent = {0, 1, 0}; break;
    case GenMode::right: z.intent = {0, 0, 1}; break;
    case GenMode::forward: z.intent = {1, 0, 0}; break;
  }
  return z;
}

// ---- sweep ------------------------------------------------------------------

const std::vector<double>& default_sweep_offsets() {
  static const std::vector<double> k{-3.0, -2.0, -1.0, 0.5, 1.0, 1.5};
  return k;
}

namespace {

LatentCode forced_intent(LatentCode z, const std::string& cls) {
  if (cls == "none") return z;
  if (cls == "forward") z.intent = {1, 0, 0};
  else if (cls == "left") z.intent = {0, 1, 0};
  else if (cls == "right") z.intent = {0, 0, 1};
  else throw UsageError("unknown intent override '" + cls + "'");
  return z;
}

}  // namespace

SweepReport sweep_behavior(Checkpoint& ck, const std::vector<Scenario>& scens,
                           const std::vector<double>& offsets,
                           const std::string& intent_override, double threshold) {
  check_data(!scens.empty(), "sweep: empty scenario set");
  check_data(threshold > 0, "sweep: non-positive distance threshold");
  forced_intent(LatentCode{}, intent_override);  // validate the class name early
  const ModelConfig& mc = ck.model;
  const int H = mc.horizon;
  const int chunk = 32;
  const int n = int(scens.size());

  SweepReport rep;
  rep.n_scenarios = n;
  rep.threshold = threshold;
  std::vector<int> risky(offsets.size(), 0);
  int risky_base = 0;

  for (int at = 0; at < n; at += chunk) {
    std::vector<const Scenario*> ptrs;
    for (int i = at; i < std::min(n, at + chunk); ++i) ptrs.push_back(&scens[size_t(i)]);
    FeatBatch fb = feat_batch_build(ptrs);
    std::vector<LatentCode> codes = tae_encode(fb, ck.params, mc);

    // Reference futures per scenario: the ego replays its recorded plan.
    std::vector<const Agent*> ego(ptrs.size(), nullptr);
    for (int r = 0; r < fb.n_agents; ++r) {
      const Agent& a = ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
      if (!a.ego) continue;
      check_data(!ego[size_t(fb.scen_of[size_t(r)])], "sweep: multiple ego agents in scenario");
      ego[size_t(fb.scen_of[size_t(r)])] = &a;
    }
    for (size_t s = 0; s < ptrs.size(); ++s) {
      check_data(ego[s] != nullptr, "sweep: scenario without an ego agent");
      check_data(int(ego[s]->fut.size()) == H, "sweep: horizon mismatch with checkpoint");
    }

    auto count_risky = [&](const std::vector<LatentCode>& cs, std::vector<bool>& flags) {
      Array trajs = tae_decode(cs, ck.params, mc);
      flags.assign(ptrs.size(), false);
      for (int r = 0; r < fb.n_agents; ++r) {
        int s = fb.scen_of[size_t(r)];
        const Agent& a = ptrs[size_t(s)]->agents[size_t(fb.agent_pos[size_t(r)])];
        if (a.ego || flags[size_t(s)]) continue;
        auto world = row_to_world(fb.frame[size_t(r)], trajs, r);
        for (int t = 0; t < H; ++t)
          if ((world[size_t(t)] - ego[size_t(s)]->fut[size_t(t)]).norm() < threshold) {
            flags[size_t(s)] = true;
            break;
          }
      }
    };

    auto modified = [&](double offset, const std::string& forced) {
      std::vector<LatentCode> mod = codes;
      for (int r = 0; r < fb.n_agents; ++r) {
        const Agent& a =
            ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
        if (a.ego) continue;
        mod[size_t(r)].agg = std::max(mod[size_t(r)].agg + offset, 0.05);
        mod[size_t(r)] = forced_intent(mod[size_t(r)], forced);
      }
      return mod;
    };

    // The baseline goes through the same offset map (at zero, no override) so
    // the clamp floor never makes a zero-offset row diverge from it.
    std::vector<bool> flags;
    count_risky(modified(0.0, "none"), flags);
    for (bool f : flags) risky_base += f;

    for (size_t oi = 0; oi < offsets.size(); ++oi) {
      count_risky(modified(offsets[oi], intent_override), flags);
      for (bool f : flags) risky[oi] += f;
    }
  }

  rep.risky_base = risky_base;
  SweepRow base;
  base.offset = 0;
  base.forced = "none";
  base.risky = risky_base;
  base.pct_valid = true;
  base.pct_change = 0;
  rep.rows.push_back(base);
  for (size_t oi = 0; oi < offsets.size(); ++oi) {
    SweepRow row;
    row.offset = offsets[oi];
    row.forced = intent_override;
    row.risky = risky[oi];
    row.pct_valid = risky_base > 0;
    row.pct_change = row.pct_valid ? 100.0 * (risky[oi] - risky_base) / risky_base : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---- report -----------------------------------------------------------------

double EvalReport::get(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return v;
  throw DataError("report: no metric named '" + name + "'");
}

bool EvalReport::has(const std::string& name) const {
  for (const auto& [k, v] : metrics)
    if (k == name) return true;
  return false;
}

std::string EvalReport::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  nlohmann::ordered_json m = nlohmann::ordered_json::object();
  for (const auto& [k, v] : metrics) m[k] = v;
  j["metrics"] = m;
  return j.dump(2) + "\n";
}

std::string EvalReport::to_csv() const {
  std::string out = "name,value,config_hash\n";
  char buf[64];
  for (const auto& [k, v] : metrics) {
    std::snprintf(buf, sizeof buf, "%.9g", v);
    out += k + "," + buf + "," + config_hash + "\n";
  }
  return out;
}

void sweep_into(EvalReport& rep, const SweepReport& sw) {
  rep.add("sweep_threshold", sw.threshold);
  rep.add("sweep_scenarios", double(sw.n_scenarios));
  char buf[64];
  for (const auto& row : sw.rows) {
    std::string tag;
    if (row.forced != "none") tag = row.forced + "_";
    if (&row == &sw.rows.front()) {
      rep.add("risky_base", double(row.risky));
      continue;
    }
    std::snprintf(buf, sizeof buf, "%+g", row.offset);
    rep.add("risky_" + tag + buf, double(row.risky));
    if (row.pct_valid) rep.add("pct_" + tag + buf, row.pct_change);
  }
}

EvalReport evaluate(Checkpoint& ck, const std::vector<Scenario>& scens, double agg_offset,
                    uint64_t seed) {
  check_data(!scens.empty(), "evaluate: empty scenario set");
  const ModelConfig& mc = ck.model;
  const int H = mc.horizon;
  const int chunk = 32;
  const int n = int(scens.size());

  double ade = 0, fde = 0, min_ade = 0, min_fde = 0, cv_ade = 0, cv_fde = 0;
  int rows_total = 0, min_within = 0;
  std::vector<LatentCode> all_codes;
  std::vector<BehaviorLabel> all_truth;
  std::vector<std::vector<double>> vec_modes, vec_ml;

  for (int at = 0; at < n; at += chunk) {
    std::vector<const Scenario*> ptrs;
    for (int i = at; i < std::min(n, at + chunk); ++i) ptrs.push_back(&scens[size_t(i)]);
    FeatBatch fb = feat_batch_build(ptrs);
    Array targets = future_targets(fb, ptrs, H);
    Array cv = constant_velocity_targets(fb, ptrs, H);
    std::vector<LatentCode> codes = tae_encode(fb, ck.params, mc);

    std::vector<LatentCode> mode_codes;
    mode_codes.reserve(codes.size() * kNumModes);
    for (const auto& c : codes)
      for (int m = 0; m < kNumModes; ++m) mode_codes.push_back(apply_mode(c, GenMode(m), agg_offset));
    Array mode_trajs = tae_decode(mode_codes, ck.params, mc);

    // Candidate 0 is the untouched most-likely code, so K=1 metrics reuse its
    // exact decoded rows.
    Array ml = Array::zeros({fb.n_agents, 2 * H});
    for (int r = 0; r < fb.n_agents; ++r)
      std::copy_n(&mode_trajs.v[size_t(r) * kNumModes * 2 * H], size_t(2 * H),
                  &ml.v[size_t(r) * 2 * H]);

    auto a1 = per_row_ade(ml, targets);
    auto f1 = per_row_fde(ml, targets);
    auto ac = per_row_ade(cv, targets);
    auto fc = per_row_fde(cv, targets);
    DisplacementStats mm = min_displacement_metrics(mode_trajs, targets, kNumModes);
    min_ade += mm.ade * fb.n_agents;
    min_fde += mm.fde * fb.n_agents;
    for (int r = 0; r < fb.n_agents; ++r) {
      ade += a1[size_t(r)];
      fde += f1[size_t(r)];
      cv_ade += ac[size_t(r)];
      cv_fde += fc[size_t(r)];
      double best = 1e300;
      for (int m = 0; m < kNumModes; ++m) {
        const float* p = &mode_trajs.v[size_t(r * kNumModes + m) * 2 * H];
        const float* q = &targets.v[size_t(r) * 2 * H];
        best = std::min(best, row_step_dist(p, q, H - 1));
      }
      min_within += best <= f1[size_t(r)];
      ++rows_total;
    }

    auto truth = hidden_truth(fb, ptrs);
    all_truth.insert(all_truth.end(), truth.begin(), truth.end());
    all_codes.insert(all_codes.end(), codes.begin(), codes.end());

    for (int r = 0; r < fb.n_agents; ++r) {
      const Agent& a =
          ptrs[size_t(fb.scen_of[size_t(r)])]->agents[size_t(fb.agent_pos[size_t(r)])];
      if (a.ego) continue;
      vec_ml.push_back(cluster_vector(&ml.v[size_t(r) * 2 * H], H));
      for (int m = 0; m < kNumModes; ++m)
        vec_modes.push_back(cluster_vector(&mode_trajs.v[size_t(r * kNumModes + m) * 2 * H], H));
    }
  }

  EvalReport rep;
  uint64_t h = fnv1a64("eval");
  for (const auto& [name, arr] : ck.params) {
    h = fnv1a64(name, h);
    h = fnv1a64(arr.v.data(), arr.v.size() * sizeof(float), h);
  }
  h = fnv1a64(&n, sizeof n, h);
  h = fnv1a64(&agg_offset, sizeof agg_offset, h);
  h = fnv1a64(&seed, sizeof seed, h);
  h = fnv1a64(&H, sizeof H, h);
  rep.config_hash = hex64(h);

  rep.add("n_scenarios", n);
  rep.add("n_agents", rows_total);
  rep.add("ade", ade / rows_total);
  rep.add("fde", fde / rows_total);
  rep.add("min_ade_k6", min_ade / rows_total);
  rep.add("min_fde_k6", min_fde / rows_total);
  rep.add("min_fde_within_fde", double(min_within) / rows_total);
  rep.add("cv_ade", cv_ade / rows_total);
  rep.add("cv_fde", cv_fde / rows_total);

  BehaviorReport br = behavior_metrics(all_codes, all_truth);
  rep.add("intent_rows", br.intent_rows);
  rep.add("intent_accuracy", br.intent_accuracy);
  rep.add("agg_rows", br.agg_rows);
  rep.add("agg_mse", br.agg_mse);
  rep.add("agg_mean_baseline_mse", br.mean_baseline_mse);

  LatentStats ls = latent_stats(all_codes, mc.prior);
  double mabs = 0, smin = 1e300, smax = 0;
  for (int d = 0; d < 6; ++d) {
    mabs = std::max(mabs, std::abs(ls.gauss_mean[size_t(d)]));
    smin = std::min(smin, ls.gauss_std[size_t(d)]);
    smax = std::max(smax, ls.gauss_std[size_t(d)]);
  }
  rep.add("gauss_mean_abs_max", mabs);
  rep.add("gauss_std_min", smin);
  rep.add("gauss_std_max", smax);
  rep.add("agg_log_ks", ls.agg_log_ks);
  rep.add("intent_mean_forward", ls.intent_mean[0]);
  rep.add("intent_mean_left", ls.intent_mean[1]);
  rep.add("intent_mean_right", ls.intent_mean[2]);

  if (int(vec_ml.size()) >= 50) {
    DpgmmConfig dc;
    dc.seed = seed;
    DpgmmResult rml = dpgmm_fit(vec_ml, dc);
    DpgmmResult rmx = dpgmm_fit(vec_modes, dc);
    for (double th : {0.05, 0.03, 0.01}) {
      char name[48];
      std::snprintf(name, sizeof name, "clusters_ml_%g", th);
      rep.add(name, rml.clusters_at(th));
      std::snprintf(name, sizeof name, "clusters_modes_%g", th);
      rep.add(name, rmx.clusters_at(th));
    }
    rep.add("cluster_warning", (!rml.converged || !rmx.converged) ? 1 : 0);
  }
  return rep;
}

}  // namespace tae
