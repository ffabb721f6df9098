#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tae/adam.hpp"
#include "tae/model.hpp"
#include "tae/params.hpp"
#include "tae/scenario.hpp"

namespace tae {

// Multi-phase optimization. Each batch runs, in order: adversarial encoder
// update, discriminator update, semi-supervised encoder update on the labeled
// sub-batch, then a joint reconstruction update of extractor+encoder+decoder.
// A separate diversity stage follows the main epochs, spreading K
// behavior-conditioned decodings while a mode classifier learns to rank them.

struct TrainConfig {
  int epochs = 30;
  int batch = 32;  // scenarios per batch
  float lr_pred = 1e-4f;
  float lr_adv = 1e-5f;
  float lr_disc = 1e-5f;
  float lr_semi = 5e-5f;
  int div_epochs = 5;
  float lambda_d = 0.1f;
  double label_frac = 0.3;  // informational: the dataset carries the labels
  uint64_t seed = 0;
  bool oversample_labeled = false;  // repeat labeled rows up to the batch size
  float grad_clip = 0.0f;           // global-norm clip; 0 disables
};

struct LossRow {
  int epoch = 0;
  int batch = 0;
  std::string phase;  // adv | disc | semi | pred | div | cls
  double loss = 0.0;
};

struct Checkpoint {
  TrainConfig train;
  ModelConfig model;
  ParamStore params;
  AdamState opt_pred, opt_adv, opt_disc, opt_semi, opt_cls;
  int epoch = 0;      // completed main epochs
  int div_epoch = 0;  // completed diversity epochs
  uint64_t rng_key = 0, rng_counter = 0;  // root stream identity
};

// Fresh checkpoint: seeded parameters, optimizers at the configured rates.
Checkpoint train_init(const ModelConfig& mc, const TrainConfig& tc);

// Runs main epochs [ck.epoch, ck.train.epochs). Resuming a loaded checkpoint
// continues bit-identically with an uninterrupted run. `log` may be null.
void train_main(Checkpoint& ck, const std::vector<Scenario>& data, std::vector<LossRow>* log);

// Diversity epochs [ck.div_epoch, ck.train.div_epochs); requires main stage
// done. Logged epochs continue after the main-stage numbering.
void train_diversity(Checkpoint& ck, const std::vector<Scenario>& data,
                     std::vector<LossRow>* log);

// The six behavior overrides used for diverse generation: all three intent
// one-hots crossed with the lower/upper quartile of the headway prior.
std::vector<LatentCode> diverse_codes(const LatentCode& base, const PriorConfig& pc);

// Versioned binary container; load(save(c)) is bit-exact. Unknown versions
// and truncated or size-inconsistent files are rejected with DataError.
void save_checkpoint(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint(const std::string& path);

void write_loss_csv(const std::string& path, const std::vector<LossRow>& rows);

}  // namespace tae
