#include "tae/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <string>

#include "tae/error.hpp"

namespace tae::kernels {

#ifdef TAE_HAVE_AVX2_TU
const F32Table& avx2_f32();
#endif

namespace {

bool cpu_has_avx2() {
#if defined(TAE_HAVE_AVX2_TU) && (defined(__x86_64__) || defined(_M_X64))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Backend detect() {
  const char* env = std::getenv("TAE_BACKEND");
  if (env && *env) {
    if (std::strcmp(env, "scalar") == 0) return Backend::scalar;
    if (std::strcmp(env, "avx2") == 0) {
      if (!cpu_has_avx2()) throw UsageError("TAE_BACKEND=avx2 but AVX2 is unavailable");
      return Backend::avx2;
    }
    if (std::strcmp(env, "auto") != 0)
      throw UsageError(std::string("unknown TAE_BACKEND value: ") + env);
  }
  return cpu_has_avx2() ? Backend::avx2 : Backend::scalar;
}

Backend g_active = detect();

}  // namespace

Backend active() { return g_active; }

bool supported(Backend b) { return b == Backend::scalar || cpu_has_avx2(); }

void set_active(Backend b) {
  if (!supported(b)) throw UsageError("requested kernel backend is unsupported on this CPU");
  g_active = b;
}

const char* name(Backend b) { return b == Backend::avx2 ? "avx2" : "scalar"; }

const F32Table& f32() {
#ifdef TAE_HAVE_AVX2_TU
  if (g_active == Backend::avx2) return avx2_f32();
#endif
  return scalar_f32();
}

template <> void gemm<float>(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  f32().gemm(a, b, c, m, k, n, acc);
}
template <> float sum<float>(const float* x, int64_t n) { return f32().sum(x, n); }
template <> float dot<float>(const float* a, const float* b, int64_t n) { return f32().dot(a, b, n); }
template <> float sse<float>(const float* a, const float* b, int64_t n) { return f32().sse(a, b, n); }

}  // namespace tae::kernels
