#pragma once

#include <cstdint>
#include <cstdio>
#include <string>

namespace tae {

// FNV-1a, the usual 64-bit constants. Used for content-addressing manifests
// and reports; not cryptographic.
inline uint64_t fnv1a64(const void* data, size_t n, uint64_t h = 14695981039346656037ull) {
  const unsigned char* p = static_cast<const unsigned char*>(data);
  for (size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 1099511628211ull;
  }
  return h;
}

inline uint64_t fnv1a64(const std::string& s, uint64_t h = 14695981039346656037ull) {
  return fnv1a64(s.data(), s.size(), h);
}

inline std::string hex64(uint64_t v) {
  char b[17];
  std::snprintf(b, sizeof b, "%016llx", static_cast<unsigned long long>(v));
  return b;
}

}  // namespace tae
