#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "tae/scenario.hpp"

namespace tae {

// Synthetic scenario generator: straight multi-lane roads and 4-way
// intersections populated with car-following platoons whose target time
// headway is drawn from log-normal(0.30, 0.55) truncated to [0.5, 10] s, and
// whose maneuvers (keep / left / right) follow the configured intention mix.
// The drawn behavior is stored per agent as hidden ground truth; rule-based
// labels are revealed for a configurable fraction of agents.
struct SynthConfig {
  int n = 1;           // scenario count
  int agents = 5;      // agents per scenario, 2..8
  std::array<double, 3> intent_mix{1.0 / 3, 1.0 / 3, 1.0 / 3};  // forward/left/right
  double label_frac = 0.3;  // fraction of agents with revealed labels
  int horizon = kDefaultHorizon;
  uint64_t seed = 0;
};

std::vector<Scenario> synth_generate(const SynthConfig& cfg);

// The longitudinal control law used by simulated followers (exposed for
// direct inspection of its equilibrium): relative-speed damping plus
// gap-error correction toward gap = target_headway * v.
double car_following_accel(double v, double v_lead, double gap, double target_headway);

// Behavior prior constants shared with the model's latent prior.
constexpr double kHeadwayLogMu = 0.30;
constexpr double kHeadwayLogSigma = 0.55;
constexpr double kHeadwayMin = 0.5;
constexpr double kHeadwayMax = 10.0;

}  // namespace tae
