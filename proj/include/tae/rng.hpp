#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

namespace tae {

// Splittable counter-based generator. A stream is (key, counter); draws hash
// the pair through the SplitMix64 finalizer, so any stream can be recreated
// from its key alone and child streams derived by label never collide with
// the parent. This is what makes resume-from-checkpoint bit-exact: training
// derives a fresh stream per (epoch, batch) instead of consuming a shared
// sequence.
class Rng {
 public:
  explicit Rng(uint64_t key = 0, uint64_t counter = 0) : key_(key), ctr_(counter) {}

  uint64_t key() const { return key_; }
  uint64_t counter() const { return ctr_; }

  static uint64_t mix(uint64_t z) {
    z += 0x9e3779b97f4a7c15ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  uint64_t next_u64() { return mix(key_ ^ mix(ctr_++)); }

  // Child stream with an independent key; does not disturb this stream.
  Rng derive(const std::string& label) const {
    uint64_t h = 0xcbf29ce484222325ull;  // FNV-1a over the label, then mixed with our key
    for (unsigned char c : label) {
      h ^= c;
      h *= 0x100000001b3ull;
    }
    return Rng(mix(key_ ^ mix(h)));
  }

  Rng derive(uint64_t salt) const { return Rng(mix(key_ ^ mix(salt ^ 0xd1b54a32d192ed03ull))); }

  // Uniform in [0, 1): top 53 bits.
  double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  int uniform_int(int n) { return int(next_u64() % uint64_t(n)); }

  // Box-Muller, no caching: each call consumes exactly two u64 draws, so the
  // stream position is a pure function of the call count.
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    if (u1 < 1e-300) u1 = 1e-300;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  double lognormal(double mu, double sigma) { return std::exp(normal(mu, sigma)); }

  // Index draw from unnormalised non-negative weights.
  int categorical(const std::vector<double>& w) {
    double total = 0;
    for (double x : w) total += x;
    double r = uniform() * total;
    double acc = 0;
    for (size_t i = 0; i + 1 < w.size(); ++i) {
      acc += w[i];
      if (r < acc) return int(i);
    }
    return int(w.size()) - 1;
  }

  template <typename T>
  void shuffle(std::vector<T>& xs) {
    for (size_t i = xs.size(); i > 1; --i) {
      size_t j = size_t(next_u64() % i);
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  uint64_t key_;
  uint64_t ctr_;
};

}  // namespace tae
