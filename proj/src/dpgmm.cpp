#include "tae/dpgmm.hpp"

#include <cmath>

#include "tae/rng.hpp"

namespace tae {
namespace {

// digamma via the asymptotic series after shifting the argument above 6
double digamma(double x) {
  double r = 0;
  while (x < 6) {
    r -= 1.0 / x;
    x += 1;
  }
  double f = 1.0 / (x * x);
  return r + std::log(x) - 0.5 / x -
         f * (1.0 / 12 - f * (1.0 / 120 - f * (1.0 / 252 - f * (1.0 / 240 - f / 132))));
}

}  // namespace

DpgmmResult dpgmm_fit(const std::vector<std::vector<double>>& x, const DpgmmConfig& cfg) {
  const int N = int(x.size());
  check_data(N >= 50, "dpgmm: needs at least 50 points, got " + std::to_string(N));
  const int D = int(x[0].size());
  check_data(D >= 1, "dpgmm: empty vectors");
  for (const auto& p : x)
    check_data(int(p.size()) == D, "dpgmm: inconsistent vector lengths");
  const int T = cfg.truncation;
  check_data(T >= 2 && cfg.alpha > 0 && cfg.max_iters >= 1, "dpgmm: bad config");
  const size_t st = size_t(T), sd = size_t(T) * size_t(D);

  // Empirical Normal-Gamma prior: unit pseudo-count at the data mean, expected
  // precision matching the per-dimension variance.
  std::vector<double> m0(size_t(D), 0.0), b0(size_t(D), 0.0);
  for (const auto& p : x)
    for (int d = 0; d < D; ++d) m0[size_t(d)] += p[size_t(d)];
  for (int d = 0; d < D; ++d) m0[size_t(d)] /= N;
  for (const auto& p : x)
    for (int d = 0; d < D; ++d) {
      double c = p[size_t(d)] - m0[size_t(d)];
      b0[size_t(d)] += c * c;
    }
  for (int d = 0; d < D; ++d) b0[size_t(d)] = std::max(b0[size_t(d)] / N, 1e-6);
  const double beta0 = 1.0, a0 = 1.0;

  // Initial responsibilities from kmeans++-style seeds: spread-out centers
  // break symmetry far more reliably than uniform noise, so well-separated
  // bundles each start with their own component.
  std::vector<double> r(size_t(N) * T);
  {
    Rng rng(cfg.seed);
    std::vector<int> centers(st);
    std::vector<double> d2(size_t(N), 1e300);
    centers[0] = rng.uniform_int(N);
    for (int t = 1; t < T; ++t) {
      double total = 0;
      for (int n = 0; n < N; ++n) {
        double s = 0;
        for (int d = 0; d < D; ++d) {
          double c = x[size_t(n)][size_t(d)] - x[size_t(centers[size_t(t - 1)])][size_t(d)];
          s += c * c;
        }
        d2[size_t(n)] = std::min(d2[size_t(n)], s);
        total += d2[size_t(n)];
      }
      if (total <= 0) {
        centers[size_t(t)] = rng.uniform_int(N);
        continue;
      }
      double u = rng.uniform() * total, acc = 0;
      int pick = N - 1;
      for (int n = 0; n < N; ++n) {
        acc += d2[size_t(n)];
        if (acc >= u) {
          pick = n;
          break;
        }
      }
      centers[size_t(t)] = pick;
    }
    double scale = 0;
    for (int n = 0; n < N; ++n) scale += d2[size_t(n)];
    scale = std::max(scale / N, 1e-6);
    std::vector<double> lr(st);
    for (int n = 0; n < N; ++n) {
      double mx = -1e300;
      for (int t = 0; t < T; ++t) {
        double s = 0;
        for (int d = 0; d < D; ++d) {
          double c = x[size_t(n)][size_t(d)] - x[size_t(centers[size_t(t)])][size_t(d)];
          s += c * c;
        }
        lr[size_t(t)] = -0.5 * s / scale;
        mx = std::max(mx, lr[size_t(t)]);
      }
      double s = 0;
      for (int t = 0; t < T; ++t) {
        lr[size_t(t)] = std::exp(lr[size_t(t)] - mx);
        s += lr[size_t(t)];
      }
      for (int t = 0; t < T; ++t) r[size_t(n) * T + t] = lr[size_t(t)] / s;
    }
  }

  std::vector<double> Nt(st), g1(st), g2(st), beta(st), a(st);
  std::vector<double> m(sd), b(sd), xbar(sd), S(sd);
  std::vector<double> eln_v(st), eln_1mv(st), eln_pi(st);

  auto m_step = [&] {
    for (int t = 0; t < T; ++t) {
      double nt = 0;
      for (int n = 0; n < N; ++n) nt += r[size_t(n) * T + t];
      Nt[size_t(t)] = nt;
    }
    for (int t = 0; t < T; ++t) {
      double nt = Nt[size_t(t)];
      double* xb = &xbar[size_t(t) * D];
      double* sc = &S[size_t(t) * D];
      for (int d = 0; d < D; ++d) xb[d] = sc[d] = 0;
      for (int n = 0; n < N; ++n) {
        double w = r[size_t(n) * T + t];
        for (int d = 0; d < D; ++d) xb[d] += w * x[size_t(n)][size_t(d)];
      }
      double safe = std::max(nt, 1e-12);
      for (int d = 0; d < D; ++d) xb[d] /= safe;
      for (int n = 0; n < N; ++n) {
        double w = r[size_t(n) * T + t];
        for (int d = 0; d < D; ++d) {
          double c = x[size_t(n)][size_t(d)] - xb[d];
          sc[d] += w * c * c;
        }
      }
      double rest = 0;
      for (int s2 = t + 1; s2 < T; ++s2) rest += Nt[size_t(s2)];
      g1[size_t(t)] = 1.0 + nt;
      g2[size_t(t)] = cfg.alpha + rest;
      beta[size_t(t)] = beta0 + nt;
      a[size_t(t)] = a0 + 0.5 * nt;
      double shrink = beta0 * nt / (beta0 + nt);
      for (int d = 0; d < D; ++d) {
        m[size_t(t) * D + d] = (beta0 * m0[size_t(d)] + nt * xb[d]) / beta[size_t(t)];
        double gap = xb[d] - m0[size_t(d)];
        b[size_t(t) * D + d] = b0[size_t(d)] + 0.5 * sc[d] + 0.5 * shrink * gap * gap;
      }
    }
    // Stick expectations; the last stick is pinned to take the remainder.
    double acc = 0;
    for (int t = 0; t < T; ++t) {
      if (t < T - 1) {
        double dg = digamma(g1[size_t(t)] + g2[size_t(t)]);
        eln_v[size_t(t)] = digamma(g1[size_t(t)]) - dg;
        eln_1mv[size_t(t)] = digamma(g2[size_t(t)]) - dg;
        eln_pi[size_t(t)] = acc + eln_v[size_t(t)];
        acc += eln_1mv[size_t(t)];
      } else {
        eln_v[size_t(t)] = 0;
        eln_1mv[size_t(t)] = 0;
        eln_pi[size_t(t)] = acc;
      }
    }
  };

  constexpr double kLn2Pi = 1.8378770664093453;
  auto eln_gauss = [&](int n, int t) {
    double s = 0;
    for (int d = 0; d < D; ++d) {
      double at = a[size_t(t)], bt = b[size_t(t) * D + d];
      double c = x[size_t(n)][size_t(d)] - m[size_t(t) * D + d];
      s += digamma(at) - std::log(bt) - kLn2Pi - 1.0 / beta[size_t(t)] - at / bt * c * c;
    }
    return 0.5 * s;
  };

  auto e_step = [&] {
    std::vector<double> lr(st);
    for (int n = 0; n < N; ++n) {
      double mx = -1e300;
      for (int t = 0; t < T; ++t) {
        lr[size_t(t)] = eln_pi[size_t(t)] + eln_gauss(n, t);
        mx = std::max(mx, lr[size_t(t)]);
      }
      double s = 0;
      for (int t = 0; t < T; ++t) {
        lr[size_t(t)] = std::exp(lr[size_t(t)] - mx);
        s += lr[size_t(t)];
      }
      for (int t = 0; t < T; ++t) r[size_t(n) * T + t] = lr[size_t(t)] / s;
    }
  };

  auto lgamma_ = [](double v) { return std::lgamma(v); };
  auto elbo = [&] {
    double e = 0;
    for (int n = 0; n < N; ++n)
      for (int t = 0; t < T; ++t) {
        double w = r[size_t(n) * T + t];
        if (w < 1e-300) continue;
        e += w * (eln_gauss(n, t) + eln_pi[size_t(t)] - std::log(w));
      }
    for (int t = 0; t < T - 1; ++t) {
      // p(v) = Beta(1, alpha) against q(v) = Beta(g1, g2)
      e += lgamma_(1 + cfg.alpha) - lgamma_(cfg.alpha) + (cfg.alpha - 1) * eln_1mv[size_t(t)];
      e -= lgamma_(g1[size_t(t)] + g2[size_t(t)]) - lgamma_(g1[size_t(t)]) -
           lgamma_(g2[size_t(t)]) + (g1[size_t(t)] - 1) * eln_v[size_t(t)] +
           (g2[size_t(t)] - 1) * eln_1mv[size_t(t)];
    }
    for (int t = 0; t < T; ++t)
      for (int d = 0; d < D; ++d) {
        double at = a[size_t(t)], bt = b[size_t(t) * D + d], btt = beta[size_t(t)];
        double elnl = digamma(at) - std::log(bt), el = at / bt;
        double gap = m[size_t(t) * D + d] - m0[size_t(d)];
        e += 0.5 * (std::log(beta0) - kLn2Pi + elnl) -
             0.5 * beta0 * (1.0 / btt + el * gap * gap) + a0 * std::log(b0[size_t(d)]) -
             lgamma_(a0) + (a0 - 1) * elnl - b0[size_t(d)] * el;
        e -= 0.5 * (std::log(btt) - kLn2Pi + elnl) - 0.5 + at * std::log(bt) - lgamma_(at) +
             (at - 1) * elnl - at;
      }
    return e;
  };

  DpgmmResult res;
  m_step();
  double prev = elbo();
  for (int it = 1; it <= cfg.max_iters; ++it) {
    e_step();
    m_step();
    double cur = elbo();
    res.iterations = it;
    res.elbo = cur;
    if (std::abs(cur - prev) / N < cfg.plateau) {
      res.converged = true;
      break;
    }
    prev = cur;
  }
  res.mass.resize(size_t(T));
  for (int t = 0; t < T; ++t) res.mass[size_t(t)] = Nt[size_t(t)] / N;
  return res;
}

int dpgmm_cluster(const std::vector<std::vector<double>>& x, double threshold,
                  const DpgmmConfig& cfg, bool* warning) {
  DpgmmResult res = dpgmm_fit(x, cfg);
  if (warning) *warning = !res.converged;
  return res.clusters_at(threshold);
}

std::vector<double> cluster_vector(const float* row, int horizon) {
  check_data(horizon >= 10, "dpgmm: horizon below the 10-waypoint subsample");
  std::vector<double> v(20);
  for (int i = 0; i < 10; ++i) {
    int w = (i + 1) * horizon / 10 - 1;
    v[size_t(i) * 2] = double(row[w * 2]);
    v[size_t(i) * 2 + 1] = double(row[w * 2 + 1]);
  }
  return v;
}

}  // namespace tae
