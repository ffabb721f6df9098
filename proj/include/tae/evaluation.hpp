#pragma once

#include <array>
#include <string>
#include <vector>

#include "tae/dpgmm.hpp"
#include "tae/features.hpp"
#include "tae/model.hpp"
#include "tae/train.hpp"

namespace tae {

// ---- displacement ---------------------------------------------------------

struct DisplacementStats {
  double ade = 0, fde = 0;
};

// pred/truth: (A, 2*horizon) in a shared frame.
DisplacementStats displacement_metrics(const Array& pred, const Array& truth);

// cands: (A*K, 2*horizon) agent-major candidate sets; per agent the best
// candidate is taken independently for ADE and FDE, then averaged.
DisplacementStats min_displacement_metrics(const Array& cands, const Array& truth, int K);

std::vector<double> per_row_ade(const Array& pred, const Array& truth);
std::vector<double> per_row_fde(const Array& pred, const Array& truth);

// ---- behavior recovery ----------------------------------------------------

struct BehaviorReport {
  int intent_rows = 0, agg_rows = 0;
  double intent_accuracy = 0;      // argmax(z_intent) match rate
  double agg_mse = 0;              // s^2 against the truth headway
  double mean_baseline_mse = 0;    // predict-the-mean headway (== truth variance)
};

// truth[r] supplies per-row eligibility: rows without an intent (headway)
// entry are skipped for that metric.
BehaviorReport behavior_metrics(const std::vector<LatentCode>& codes,
                                const std::vector<BehaviorLabel>& truth);

// Truth rows aligned with the batch's output rows. Hidden truth marks an
// agent headway-eligible only when a lead was actually observable, so
// platoon leaders (whose stored target never shaped the track) drop out.
std::vector<BehaviorLabel> hidden_truth(const FeatBatch& b,
                                        const std::vector<const Scenario*>& scens);
std::vector<BehaviorLabel> revealed_truth(const FeatBatch& b,
                                          const std::vector<const Scenario*>& scens);

// ---- baselines ------------------------------------------------------------

// Extrapolates the final observed velocity for `horizon` steps (world frame).
std::vector<Pt> constant_velocity_traj(const Agent& a, int horizon);

// Same baseline as canonical-frame rows aligned with the batch (A, 2*horizon).
Array constant_velocity_targets(const FeatBatch& b, const std::vector<const Scenario*>& scens,
                                int horizon);

// ---- latent distribution --------------------------------------------------

struct LatentStats {
  std::array<double, 6> gauss_mean{}, gauss_std{};
  std::array<double, 3> intent_mean{};
  double agg_log_ks = 0;  // KS of log z_agg against the headway prior
};
LatentStats latent_stats(const std::vector<LatentCode>& codes, const PriorConfig& pc);

// Kolmogorov-Smirnov statistic of xs against N(mu, sigma).
double ks_statistic_normal(std::vector<double> xs, double mu, double sigma);

// ---- headway distribution fitting ----------------------------------------

struct DistributionFit {
  std::string family;     // log-normal | normal | gamma
  double p1 = 0, p2 = 0;  // log-normal: mu/sigma of log; normal: mean/sd; gamma: shape/scale
  double kl = 0;          // against the 50-bin sample histogram on [0, 10] s
  double sse = 0;         // histogram density vs fitted density at bin centers
};

struct HeadwayFit {
  DistributionFit lognormal, normal, gamma;
  std::string best;  // family with the lowest KL
};

// samples: >= 100 strictly positive headways (seconds).
HeadwayFit fit_headway(const std::vector<double>& samples);

// ---- generation modes -----------------------------------------------------

enum class GenMode : int { most_likely = 0, aggressive, conservative, left, right, forward };
constexpr int kNumModes = 6;
const char* mode_name(GenMode m);
GenMode mode_from_name(const std::string& s);

// Behavior override applied to an encoded code. agg_offset is the headway
// shift in seconds used by the aggressive (-) and conservative (+) modes.
LatentCode apply_mode(const LatentCode& base, GenMode m, double agg_offset = 1.0);

// ---- safety-critical sweep ------------------------------------------------

struct SweepRow {
  double offset = 0;
  std::string forced = "none";  // none | forward | left | right
  int risky = 0;
  bool pct_valid = false;  // false when the baseline count is zero
  double pct_change = 0;   // vs the unmodified most-likely generation
};

struct SweepReport {
  int n_scenarios = 0;
  double threshold = 0.5;  // metres
  int risky_base = 0;
  std::vector<SweepRow> rows;  // baseline row first, then one per offset
};

const std::vector<double>& default_sweep_offsets();  // {-3,-2,-1,+0.5,+1,+1.5}

// Ego replays its reference future; every other agent is re-generated with
// z_agg <- max(z_agg + offset, 0.05) and, optionally, a forced intent class.
// A scenario is risky when the minimum ego-to-agent distance over the horizon
// falls below `threshold`.
SweepReport sweep_behavior(Checkpoint& ck, const std::vector<Scenario>& scens,
                           const std::vector<double>& offsets,
                           const std::string& intent_override = "none", double threshold = 0.5);

// ---- report ---------------------------------------------------------------

struct EvalReport {
  std::vector<std::pair<std::string, double>> metrics;
  std::string config_hash;
  void add(const std::string& name, double v) { metrics.emplace_back(name, v); }
  double get(const std::string& name) const;
  bool has(const std::string& name) const;
  std::string to_json() const;
  std::string to_csv() const;  // name,value,config_hash
};

void sweep_into(EvalReport& rep, const SweepReport& sw);

// Full validation protocol: displacement + behavior + latent statistics +
// diversity clustering, most-likely against the six generation modes.
EvalReport evaluate(Checkpoint& ck, const std::vector<Scenario>& scens, double agg_offset = 1.0,
                    uint64_t seed = 0);

}  // namespace tae
