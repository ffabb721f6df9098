#pragma once

#include <array>
#include <string>
#include <vector>

#include "tae/features.hpp"
#include "tae/params.hpp"
#include "tae/rng.hpp"
#include "tae/scenario.hpp"
#include "tae/tape.hpp"

namespace tae {

// Behavior-aware trajectory autoencoder. The latent code has three parts:
// a 3-class intention simplex, a strictly positive aggressiveness scalar
// (time headway, seconds), and a 6-dim Gaussian residual. Discriminators
// shape the marginals of each part toward its prior; a small amount of
// labeled data anchors the first two parts to their intended meaning.

struct PriorConfig {
  std::array<double, 3> class_probs{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double agg_mu = 0.30;    // log-normal parameters of the headway prior
  double agg_sigma = 0.55;
  double sigma_d = 10.0;   // diversity kernel width, squared metres
  int K = 6;               // candidates per agent in diverse generation
};

struct ModelConfig {
  FeatConfig feat;
  int enc_hidden = 32;
  int dec_hidden = 64;
  int disc_hidden = 32;
  int cls_hidden = 64;
  int horizon = kDefaultHorizon;
  PriorConfig prior;
};

constexpr int kLatentDim = 10;  // 3 intent + 1 aggressiveness + 6 residual

struct LatentCode {
  std::array<double, 3> intent{1.0 / 3, 1.0 / 3, 1.0 / 3};
  double agg = 1.0;  // seconds, > 0
  std::array<double, 6> gauss{};
};

// Throws NumericError unless intent is a simplex point (1e-6), agg > 0, and
// every entry is finite.
void validate_latent(const LatentCode& z);

// Registers every parameter (extractor included).
void model_init(ParamStore& ps, Rng& rng, const ModelConfig& cfg);

// Prior draws. intent is exactly one-hot; agg = exp(mu + sigma * n).
std::array<double, 3> prior_intent(const PriorConfig& pc, Rng& rng);
double prior_agg(const PriorConfig& pc, Rng& rng);
std::array<double, 6> prior_gauss(Rng& rng);
LatentCode sample_prior(const PriorConfig& pc, Rng& rng);

// ---- tape builders ----------------------------------------------------
// `frozen` binds the submodule's parameters as constants, so no gradient
// reaches them; the phase structure of training depends on this.

struct EncoderNodes {
  int intent;   // (A,3) simplex rows
  int log_agg;  // (A,1) log headway, clamped to [-4,4]
  int agg;      // (A,1) headway seconds
  int gauss;    // (A,6)
  int code;     // (A,10) = [intent | log_agg | gauss]
};
EncoderNodes encode_build(Tape& t, TapeParams& tp, int feature, const ModelConfig& cfg,
                          bool frozen = false);

// code (A,10) -> canonical-frame positions (A, 2*horizon), pairs (x0,y0,x1,y1,...).
int decode_build(Tape& t, TapeParams& tp, int code, const ModelConfig& cfg, bool frozen = false);

// head: 0 intent (input (A,3)), 1 aggressiveness (log headway, (A,1)), 2 residual ((A,6)).
// Output (A,1) in (0,1).
int disc_build(Tape& t, TapeParams& tp, int head, int input, const ModelConfig& cfg,
               bool frozen = false);

// input (A*K, D + 2*horizon) rows of [feature | flattened candidate], agent-major.
// Returns (A,K) softmax scores.
int classifier_build(Tape& t, TapeParams& tp, int input, int n_agents, int K,
                     const ModelConfig& cfg, bool frozen = false);

// ---- loss builders -----------------------------------------------------
// Every builder returns a (1,1) scalar node.

// Mean over all coordinates of the smooth-L1 of (pred - target).
int loss_pred_build(Tape& t, int pred, int target);

// (1/3) sum_i mean log(1 - D_i(G_i(x))); probabilities clamped at 1e-7.
int loss_adv_build(Tape& t, const std::array<int, 3>& disc_fake);

// One head: -[mean log D(real) + mean log(1 - D(fake))].
int loss_disc_build(Tape& t, int disc_real, int disc_fake);

// Labeled sub-batch: cross entropy on intent rows plus squared error on
// headway rows (seconds), each normalized by its own labeled count.
struct SemiBatch {
  std::vector<int> intent_rows;  // row indices into the encoded batch
  Array intent_onehot;           // (|intent_rows|, 3)
  std::vector<int> agg_rows;
  Array agg_target;              // (|agg_rows|, 1) seconds
  bool empty() const { return intent_rows.empty() && agg_rows.empty(); }
};
int loss_semi_build(Tape& t, const EncoderNodes& enc, const SemiBatch& sb);

// trajs: (A*K, 2*horizon) agent-major candidates. Mean over agents of the
// pairwise kernel (1/(K(K-1))) sum_{i != j} exp(-D^2 / sigma_d).
int loss_diversity_build(Tape& t, int trajs, int n_agents, int K, double sigma_d);

// scores: (A,K) softmax rows; pos_onehot marks the positive candidate.
int loss_classifier_build(Tape& t, int scores, const Array& pos_onehot);

// ---- value helpers ------------------------------------------------------

std::vector<LatentCode> tae_encode(const FeatBatch& b, ParamStore& ps, const ModelConfig& cfg);
Array tae_decode(const std::vector<LatentCode>& codes, ParamStore& ps, const ModelConfig& cfg);

// Canonical-frame future positions (A, 2*horizon) aligned with the batch's
// output rows. Throws DataError when any agent's future length differs.
Array future_targets(const FeatBatch& b, const std::vector<const Scenario*>& scens, int horizon);

// One decoded/target row back into world coordinates.
std::vector<Pt> row_to_world(const Frame& f, const Array& a, int row);

// Names of all parameters with the given prefix, in store order.
std::vector<std::string> params_with_prefix(const ParamStore& ps, const std::string& prefix);

}  // namespace tae
