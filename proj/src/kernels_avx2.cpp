// AVX2 variants of the dispatched kernels. Compiled with -mavx2 only (no
// -mfma): gemm uses mul+add per lane so results match the scalar backend
// bitwise, and reductions follow the 8-lane scheme from kernels.hpp.

#include "tae/kernels.hpp"

#include <cmath>
#include <immintrin.h>

namespace tae::kernels {

namespace {

inline float hsum8(__m256 acc) {
  __m128 lo = _mm256_castps256_ps128(acc);
  __m128 hi = _mm256_extractf128_ps(acc, 1);
  __m128 s = _mm_add_ps(lo, hi);           // t0..t3
  __m128 sh = _mm_movehl_ps(s, s);         // t2 t3 . .
  s = _mm_add_ps(s, sh);                   // u0 u1 . .
  sh = _mm_shuffle_ps(s, s, 0x1);          // u1 . . .
  s = _mm_add_ss(s, sh);
  return _mm_cvtss_f32(s);
}

void v_gemm(const float* a, const float* b, float* c, int m, int k, int n, bool acc) {
  const int n8 = n & ~7;
  for (int i = 0; i < m; ++i) {
    const float* ai = a + int64_t(i) * k;
    float* ci = c + int64_t(i) * n;
    for (int j = 0; j < n8; j += 8) {
      __m256 s = acc ? _mm256_loadu_ps(ci + j) : _mm256_setzero_ps();
      for (int p = 0; p < k; ++p) {
        __m256 bv = _mm256_loadu_ps(b + int64_t(p) * n + j);
        s = _mm256_add_ps(s, _mm256_mul_ps(_mm256_set1_ps(ai[p]), bv));
      }
      _mm256_storeu_ps(ci + j, s);
    }
    for (int j = n8; j < n; ++j) {
      float s = acc ? ci[j] : 0.0f;
      for (int p = 0; p < k; ++p) s = s + ai[p] * b[int64_t(p) * n + j];
      ci[j] = s;
    }
  }
}

void v_add(const float* a, const float* b, float* y, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] + b[i];
}

void v_sub(const float* a, const float* b, float* y, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] - b[i];
}

void v_mul(const float* a, const float* b, float* y, int64_t n) {
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  for (; i < n; ++i) y[i] = a[i] * b[i];
}

void v_axpy(float a, const float* x, float* y, int64_t n) {
  const __m256 av = _mm256_set1_ps(a);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 yv = _mm256_loadu_ps(y + i);
    yv = _mm256_add_ps(yv, _mm256_mul_ps(av, _mm256_loadu_ps(x + i)));
    _mm256_storeu_ps(y + i, yv);
  }
  for (; i < n; ++i) y[i] = y[i] + a * x[i];
}

void v_affine(const float* x, float* y, float a, float b, int64_t n) {
  const __m256 av = _mm256_set1_ps(a), bv = _mm256_set1_ps(b);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_add_ps(_mm256_mul_ps(av, _mm256_loadu_ps(x + i)), bv));
  for (; i < n; ++i) y[i] = a * x[i] + b;
}

void v_relu(const float* x, float* y, int64_t n) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) _mm256_storeu_ps(y + i, _mm256_max_ps(_mm256_loadu_ps(x + i), z));
  for (; i < n; ++i) y[i] = x[i] > 0.0f ? x[i] : 0.0f;
}

void v_relu_bwd(const float* x, const float* g, float* gx, int64_t n) {
  const __m256 z = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 mask = _mm256_cmp_ps(_mm256_loadu_ps(x + i), z, _CMP_GT_OQ);
    __m256 gv = _mm256_and_ps(_mm256_loadu_ps(g + i), mask);
    _mm256_storeu_ps(gx + i, _mm256_add_ps(_mm256_loadu_ps(gx + i), gv));
  }
  for (; i < n; ++i) gx[i] = gx[i] + (x[i] > 0.0f ? g[i] : 0.0f);
}

void v_clamp(const float* x, float* y, float lo, float hi, int64_t n) {
  const __m256 lov = _mm256_set1_ps(lo), hiv = _mm256_set1_ps(hi);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    _mm256_storeu_ps(y + i, _mm256_min_ps(_mm256_max_ps(_mm256_loadu_ps(x + i), lov), hiv));
  for (; i < n; ++i) {
    float v = x[i];
    v = v < lo ? lo : v;
    v = v > hi ? hi : v;
    y[i] = v;
  }
}

float v_sum(const float* x, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) acc = _mm256_add_ps(acc, _mm256_loadu_ps(x + i));
  float total = hsum8(acc);
  for (; i < n; ++i) total = total + x[i];
  return total;
}

float v_dot(const float* a, const float* b, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8)
    acc = _mm256_add_ps(acc, _mm256_mul_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  float total = hsum8(acc);
  for (; i < n; ++i) total = total + a[i] * b[i];
  return total;
}

float v_sse(const float* a, const float* b, int64_t n) {
  __m256 acc = _mm256_setzero_ps();
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 d = _mm256_sub_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i));
    acc = _mm256_add_ps(acc, _mm256_mul_ps(d, d));
  }
  float total = hsum8(acc);
  for (; i < n; ++i) {
    float d = a[i] - b[i];
    total = total + d * d;
  }
  return total;
}

void v_adam(float* p, float* m, float* v, const float* g, int64_t n,
            float lr, float b1, float b2, float inv_bc1, float inv_bc2, float eps) {
  const __m256 b1v = _mm256_set1_ps(b1), c1v = _mm256_set1_ps(1.0f - b1);
  const __m256 b2v = _mm256_set1_ps(b2), c2v = _mm256_set1_ps(1.0f - b2);
  const __m256 i1v = _mm256_set1_ps(inv_bc1), i2v = _mm256_set1_ps(inv_bc2);
  const __m256 epsv = _mm256_set1_ps(eps), lrv = _mm256_set1_ps(lr);
  int64_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 gv = _mm256_loadu_ps(g + i);
    __m256 mv = _mm256_add_ps(_mm256_mul_ps(b1v, _mm256_loadu_ps(m + i)), _mm256_mul_ps(c1v, gv));
    __m256 g2 = _mm256_mul_ps(gv, gv);
    __m256 vv = _mm256_add_ps(_mm256_mul_ps(b2v, _mm256_loadu_ps(v + i)), _mm256_mul_ps(c2v, g2));
    _mm256_storeu_ps(m + i, mv);
    _mm256_storeu_ps(v + i, vv);
    __m256 mhat = _mm256_mul_ps(mv, i1v);
    __m256 vhat = _mm256_mul_ps(vv, i2v);
    __m256 denom = _mm256_add_ps(_mm256_sqrt_ps(vhat), epsv);
    __m256 upd = _mm256_mul_ps(lrv, _mm256_div_ps(mhat, denom));
    _mm256_storeu_ps(p + i, _mm256_sub_ps(_mm256_loadu_ps(p + i), upd));
  }
  const float c1 = 1.0f - b1, c2 = 1.0f - b2;
  for (; i < n; ++i) {
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

const F32Table& avx2_f32() {
  static const F32Table t = {
      v_gemm, v_add, v_sub, v_mul, v_axpy, v_affine, v_relu, v_relu_bwd,
      v_clamp, v_sum, v_dot, v_sse, v_sse, v_adam,
  };
  return t;
}

}  // namespace tae::kernels
