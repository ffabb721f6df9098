#pragma once

#include <cstdint>
#include <vector>

#include "tae/error.hpp"

namespace tae {

// Dirichlet-process Gaussian mixture fitted by truncated stick-breaking
// variational inference with diagonal covariances. Deterministic given the
// seed; used to count distinct trajectory clusters above a mass threshold.

struct DpgmmConfig {
  int truncation = 40;
  double alpha = 1.0;    // stick-breaking concentration
  int max_iters = 200;
  double plateau = 1e-4;  // stop when the per-point ELBO change drops below
  uint64_t seed = 0;
};

struct DpgmmResult {
  int iterations = 0;
  bool converged = false;  // false = hit the iteration cap (result still valid)
  double elbo = 0;
  std::vector<double> mass;  // responsibility-mass fraction per component

  // Number of components holding at least `threshold` of the total mass.
  int clusters_at(double threshold) const {
    int c = 0;
    for (double m : mass) c += m >= threshold;
    return c;
  }
};

// x: >= 50 equal-length vectors. Throws DataError otherwise.
DpgmmResult dpgmm_fit(const std::vector<std::vector<double>>& x, const DpgmmConfig& cfg = {});

int dpgmm_cluster(const std::vector<std::vector<double>>& x, double threshold,
                  const DpgmmConfig& cfg = {}, bool* warning = nullptr);

// Canonical-frame trajectory row (xy interleaved, `horizon` steps) subsampled
// to 10 waypoints and flattened to a 20-dim clustering vector.
std::vector<double> cluster_vector(const float* row, int horizon);

}  // namespace tae
