#pragma once

#include <cstdint>
#include <cstddef>

// Dense-array kernels backing the tape executor and the optimizer.
//
// Two backends: portable scalar reference code and an AVX2 variant selected
// at runtime (cpuid, overridable via set_active or the TAE_BACKEND env var).
// The backends are bit-identical by contract: elementwise kernels perform the
// same per-element operation sequence, gemm accumulates k-sequentially per
// output element without FMA, and every reduction uses the fixed 8-lane
// accumulation scheme below. Equivalence tests assert exact equality.
//
// Reduction contract: elements are folded into 8 accumulators, lane j taking
// elements j, j+8, j+16, ...; lanes combine as
//   t_i = a_i + a_{i+4}   (i = 0..3)
//   u_0 = t_0 + t_2, u_1 = t_1 + t_3
//   total = u_0 + u_1
// and any tail (n % 8) is added sequentially afterwards.

namespace tae::kernels {

enum class Backend { scalar, avx2 };

Backend active();
void set_active(Backend b);  // throws UsageError if unsupported on this CPU
bool supported(Backend b);
const char* name(Backend b);

struct F32Table {
  // C[M,N] = (acc ? C : 0) + A[M,K] * B[K,N], row-major.
  void (*gemm)(const float* a, const float* b, float* c, int m, int k, int n, bool acc);
  void (*add)(const float* a, const float* b, float* y, int64_t n);
  void (*sub)(const float* a, const float* b, float* y, int64_t n);
  void (*mul)(const float* a, const float* b, float* y, int64_t n);
  void (*axpy)(float a, const float* x, float* y, int64_t n);           // y += a*x
  void (*affine)(const float* x, float* y, float a, float b, int64_t n); // y = a*x + b
  void (*relu)(const float* x, float* y, int64_t n);
  void (*relu_bwd)(const float* x, const float* g, float* gx, int64_t n); // gx += g * (x > 0)
  void (*clamp)(const float* x, float* y, float lo, float hi, int64_t n);
  float (*sum)(const float* x, int64_t n);
  float (*dot)(const float* a, const float* b, int64_t n);
  float (*sse)(const float* a, const float* b, int64_t n);   // sum (a-b)^2
  float (*sqdist)(const float* a, const float* b, int64_t n); // alias semantics of sse
  // Bias-corrected Adam. inv_bc1 = 1/(1-b1^t), inv_bc2 = 1/(1-b2^t).
  void (*adam)(float* p, float* m, float* v, const float* g, int64_t n,
               float lr, float b1, float b2, float inv_bc1, float inv_bc2, float eps);
};

const F32Table& f32();
const F32Table& scalar_f32();  // reference table, always available

// Generic scalar entry points; the float specializations route through the
// dispatch table, double stays on the reference path.
template <typename T>
void gemm(const T* a, const T* b, T* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      T s = acc ? c[int64_t(i) * n + j] : T(0);
      for (int p = 0; p < k; ++p) s = s + a[int64_t(i) * k + p] * b[int64_t(p) * n + j];
      c[int64_t(i) * n + j] = s;
    }
  }
}

template <typename T>
T reduce8(const T* x, int64_t n) {
  T a[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int j = 0; j < 8; ++j) a[j] = a[j] + x[i + j];
  T t0 = a[0] + a[4], t1 = a[1] + a[5], t2 = a[2] + a[6], t3 = a[3] + a[7];
  T total = (t0 + t2) + (t1 + t3);
  for (; i < n; ++i) total = total + x[i];
  return total;
}

template <typename T, typename F>
T reduce8_map(int64_t n, F f) {
  T a[8] = {T(0), T(0), T(0), T(0), T(0), T(0), T(0), T(0)};
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int j = 0; j < 8; ++j) a[j] = a[j] + f(i + j);
  T t0 = a[0] + a[4], t1 = a[1] + a[5], t2 = a[2] + a[6], t3 = a[3] + a[7];
  T total = (t0 + t2) + (t1 + t3);
  for (; i < n; ++i) total = total + f(i);
  return total;
}

template <typename T>
T sum(const T* x, int64_t n) { return reduce8(x, n); }

template <typename T>
T dot(const T* a, const T* b, int64_t n) {
  return reduce8_map<T>(n, [&](int64_t i) { return a[i] * b[i]; });
}

template <typename T>
T sse(const T* a, const T* b, int64_t n) {
  return reduce8_map<T>(n, [&](int64_t i) { T d = a[i] - b[i]; return d * d; });
}

template <typename T>
void transpose(const T* a, T* at, int m, int n) {
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) at[int64_t(j) * m + i] = a[int64_t(i) * n + j];
}

template <> void gemm<float>(const float* a, const float* b, float* c, int m, int k, int n, bool acc);
template <> float sum<float>(const float* x, int64_t n);
template <> float dot<float>(const float* a, const float* b, int64_t n);
template <> float sse<float>(const float* a, const float* b, int64_t n);

}  // namespace tae::kernels
