#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tae/rng.hpp"
#include "tae/tape.hpp"

namespace tae {

// Finite-difference verification of tape gradients. The tape is replayed at
// double precision (leaf float values widened), where a central difference at
// step ~1e-4 resolves gradients to well below 1e-4 relative error — float32
// forward passes cannot, their rounding noise is of the same order as the
// difference quotient itself.
struct GradCheckResult {
  bool ok = true;
  double worst_rel = 0.0;
  std::string worst_where;
  int checked = 0;
};

struct GradCheckOpts {
  double eps = 1e-4;     // central difference step
  double rtol = 1e-4;
  double atol = 1e-7;
  int max_per_leaf = 24;  // elements sampled per leaf (all if fewer)
  uint64_t seed = 7;
};

inline GradCheckResult check_gradients(const Tape& t, int loss,
                                       const std::vector<int>& leaf_ids,
                                       GradCheckOpts opt = {}) {
  Exec<double> ex(t);
  ex.forward();
  Grads<double> gr(t, ex);
  gr.run(loss);

  GradCheckResult res;
  Rng rng(opt.seed);
  for (int id : leaf_ids) {
    const auto& base = t.leafv[id];
    std::vector<double> x(base.begin(), base.end());
    std::vector<int64_t> picks;
    int64_t n = int64_t(x.size());
    if (n <= opt.max_per_leaf) {
      for (int64_t i = 0; i < n; ++i) picks.push_back(i);
    } else {
      for (int i = 0; i < opt.max_per_leaf; ++i) picks.push_back(rng.next_u64() % uint64_t(n));
      std::sort(picks.begin(), picks.end());
      picks.erase(std::unique(picks.begin(), picks.end()), picks.end());
    }
    // A leaf the loss never touches has no recorded gradient; verify the
    // finite difference agrees that it is exactly zero.
    static const std::vector<double> kNoGrad;
    const std::vector<double>& an =
        gr.has_grad(id) ? gr.grad(id) : (const std::vector<double>&)kNoGrad;
    auto an_at = [&](int64_t i) { return an.empty() ? 0.0 : an[i]; };
    for (int64_t i : picks) {
      double keep = x[i];
      x[i] = keep + opt.eps;
      Exec<double> ep(t);
      ep.set_leaf(id, x);
      ep.forward();
      double fp = ep.scalar(loss);
      x[i] = keep - opt.eps;
      Exec<double> em(t);
      em.set_leaf(id, x);
      em.forward();
      double fm = em.scalar(loss);
      x[i] = keep;
      double fd = (fp - fm) / (2 * opt.eps);
      double diff = std::abs(fd - an_at(i));
      double scale = std::max(std::abs(fd), std::abs(an_at(i)));
      double rel = diff / std::max(scale, 1e-12);
      ++res.checked;
      if (diff > opt.atol + opt.rtol * scale) {
        res.ok = false;
        if (rel > res.worst_rel) {
          res.worst_rel = rel;
          res.worst_where = t.describe(id) + "[" + std::to_string(i) + "] analytic=" +
                            std::to_string(an_at(i)) + " fd=" + std::to_string(fd);
        }
      } else if (rel > res.worst_rel && res.ok) {
        res.worst_rel = rel;
        res.worst_where = t.describe(id) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return res;
}

}  // namespace tae
