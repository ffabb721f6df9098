#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "tae/array.hpp"
#include "tae/error.hpp"
#include "tae/kernels.hpp"

namespace tae {

// One Adam optimizer instance: first/second moment per parameter plus a step
// counter. Training keeps several of these (prediction, adversarial,
// discriminator, semi-supervised) over overlapping parameter sets, so moments
// are looked up by parameter name.
struct AdamConfig {
  float lr = 1e-4f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

struct AdamState {
  AdamConfig cfg;
  int64_t step = 0;
  std::map<std::string, std::vector<float>> m, v;

  explicit AdamState(AdamConfig c = {}) : cfg(c) {}

  // Applies one update over a named set of (param, grad) pairs. All listed
  // parameters advance under the same step count, matching the usual
  // whole-model optimizer step.
  void update(const std::vector<std::pair<std::string, Array*>>& params,
              const std::vector<const std::vector<float>*>& grads) {
    check_data(params.size() == grads.size(), "adam: parameter/gradient count mismatch");
    ++step;
    float bc1 = 1.f - std::pow(cfg.beta1, float(step));
    float bc2 = 1.f - std::pow(cfg.beta2, float(step));
    float inv_bc1 = 1.f / bc1, inv_bc2 = 1.f / bc2;
    for (size_t i = 0; i < params.size(); ++i) {
      const std::string& name = params[i].first;
      Array& p = *params[i].second;
      const std::vector<float>& g = *grads[i];
      check_data(g.size() == p.v.size(), "adam: gradient size mismatch for '" + name + "'");
      for (float x : g)
        check_numeric(std::isfinite(x), "adam: non-finite gradient for '" + name + "'");
      auto& mi = m[name];
      auto& vi = v[name];
      if (mi.empty()) {
        mi.assign(p.v.size(), 0.f);
        vi.assign(p.v.size(), 0.f);
      }
      kernels::f32().adam(p.v.data(), mi.data(), vi.data(), g.data(), int64_t(p.v.size()), cfg.lr,
                          cfg.beta1, cfg.beta2, inv_bc1, inv_bc2, cfg.eps);
    }
  }
};

}  // namespace tae
