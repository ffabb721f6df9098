#include "tae/kernels.hpp"

#include <cmath>

namespace tae::kernels {

namespace {

void s_gemm(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  for (int i = 0; i < m; ++i) {
    const float* ai = a + int64_t(i) * k;
    float* ci = c + int64_t(i) * n;
    for (int j = 0; j < n; ++j) {
      float s = acc ? ci[j] : 0.0f;
      for (int p = 0; p < k; ++p) s = s + ai[p] * b[int64_t(p) * n + j];
      ci[j] = s;
    }
  }
}

void s_add(const float* a, const float* b, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}

void s_sub(const float* a, const float* b, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}

void s_mul(const float* a, const float* b, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}

void s_axpy(float a, const float* x, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}

void s_affine(const float* x, float* y, float a, float b, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}

void s_relu(const float* x, float* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void s_relu_bwd(const float* x, const float* g, float* gx, int64_t n) {
  for (int64_t i = 0; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

void s_clamp(const float* x, float* y, float lo, float hi, int64_t n) {
  for (int64_t i = 0; i < n; ++i) {
    float v = x[i];
    v = v < lo ? lo : v;
    v = v > hi ? hi : v;
    y[i] = v;
  }
}

float s_sum(const float* x, int64_t n) { return reduce8(x, n); }

float s_dot(const float* a, const float* b, int64_t n) {
  return reduce8_map<float>(n, [&](int64_t i) { return a[i] * b[i]; });
}

float s_sse(const float* a, const float* b, int64_t n) {
  return reduce8_map<float>(n, [&](int64_t i) { float d = a[i] - b[i]; return d * d; });
}

void s_adam(float* p, float* m, float* v, const float* g, int64_t n,
            float lr, float b1, float b2, float inv_bc1, float inv_bc2, float eps) {
  const float c1 = 1.0f - b1, c2 = 1.0f - b2;
  for (int64_t i = 0; i < n; ++i) {
    float mi = b1 * m[i] + c1 * g[i];
    float gi2 = g[i] * g[i];
    float vi = b2 * v[i] + c2 * gi2;
    m[i] = mi;
    v[i] = vi;
    float mhat = mi * inv_bc1;
    float vhat = vi * inv_bc2;
    float denom = std::sqrt(vhat) + eps;
    p[i] = p[i] - lr * (mhat / denom);
  }
}

}  // namespace

const F32Table& scalar_f32() {
  static const F32Table t = {
      s_gemm, s_add, s_sub, s_mul, s_axpy, s_affine, s_relu, s_relu_bwd,
      s_clamp, s_sum, s_dot, s_sse, s_sse, s_adam,
  };
  return t;
}

}  // namespace tae::kernels
