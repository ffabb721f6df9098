#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tae/array.hpp"
#include "tae/error.hpp"
#include "tae/kernels.hpp"

namespace tae {

// Reverse-mode autodiff on an append-only graph. The tape records structure
// and leaf values only; Exec<T> materialises values at a chosen precision and
// Grads<T> walks the same graph backwards. Training runs Exec<float>; the
// gradient checker replays the identical tape as Exec<double>, which is what
// lets central differences resolve to ~1e-6 relative error.
//
// Every node is rank-2 ([1,1] for scalars). All loops below have a fixed
// iteration order, so results are reproducible and backend-independent.

enum class Op : uint8_t {
  leaf,
  matmul,        // [m,k]@[k,n] -> [m,n]
  transpose2,    // [m,n] -> [n,m]
  add,           // same shape
  sub,           // same shape
  mul,           // same shape (Hadamard)
  add_row,       // [m,n] + [1,n]
  mul_col,       // [m,n] * [m,1]
  scale,         // c0 * x
  add_const,     // x + c0
  relu,
  tanh_act,
  sigmoid,
  exp_elem,
  log_elem,      // requires positive inputs; clamp upstream
  clamp,         // [c0, c1], gradient passes inside the interval
  huber,         // per element: |x|<1 ? x^2/2 : |x|-1/2
  softmax_rows,  // softmax along each row
  segment_softmax,  // [e,1] scores, softmax within segments given by idx
  sum_all,       // -> [1,1]
  mean_all,      // -> [1,1]
  gather_rows,   // out[i] = x[idx[i]]
  scatter_add_rows,  // out[idx[i]] += x[i], n_out rows
  concat_rows,
  concat_cols,
  reshape,
  cumsum_rows,   // running sum down each column
};

const char* op_name(Op op);

struct Node {
  Op op = Op::leaf;
  std::vector<int> shape;
  int a = -1, b = -1;
  float c0 = 0.f, c1 = 0.f;
  std::vector<int> idx;  // gather/scatter targets or segment ids
  int n_out = 0;         // scatter_add_rows / segment_softmax segment count
  bool needs_grad = false;
  std::string name;  // leaves and anything worth naming in errors
};

class Tape {
 public:
  std::vector<Node> nodes;
  std::vector<std::vector<float>> leafv;  // parallel to nodes; empty for ops

  int size() const { return int(nodes.size()); }
  const std::vector<int>& shape(int id) const { return nodes[id].shape; }
  int rows(int id) const { return nodes[id].shape[0]; }
  int cols(int id) const { return nodes[id].shape[1]; }
  int64_t count(int id) const { return int64_t(rows(id)) * cols(id); }
  std::string describe(int id) const;

  // Leaves. `param` marks trainable leaves (gradients kept); constants carry
  // data only. Vectors become [1,n].
  int param(const Array& a, const std::string& name);
  int constant(const Array& a, const std::string& name = "");
  int constant(std::vector<int> shape, std::vector<float> v, const std::string& name = "");
  int zeros(int r, int c);

  int matmul(int a, int b);
  int transpose(int a);
  int add(int a, int b);
  int sub(int a, int b);
  int mul(int a, int b);
  int add_row(int a, int bias);
  int mul_col(int a, int colv);
  int scale(int a, float s);
  int add_const(int a, float c);
  int relu(int a);
  int tanh(int a);
  int sigmoid(int a);
  int exp(int a);
  int log(int a);
  int clamp(int a, float lo, float hi);
  int huber(int a);
  int softmax_rows(int a);
  int segment_softmax(int scores, std::vector<int> seg, int n_seg);
  int sum_all(int a);
  int mean_all(int a);
  int gather_rows(int a, std::vector<int> idx);
  int scatter_add_rows(int a, std::vector<int> idx, int n_out);
  int concat_rows(int a, int b);
  int concat_cols(int a, int b);
  int reshape(int a, int r, int c);
  int cumsum_rows(int a);

 private:
  int push(Node n);
  void check2(int id) const;
};

// ---------------------------------------------------------------------------
// Forward executor.

namespace detail {

template <typename T>
inline void ew_add(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] + b[i];
}
template <>
inline void ew_add<float>(const float* a, const float* b, float* y, int64_t n) {
  kernels::f32().add(a, b, y, n);
}

template <typename T>
inline void ew_sub(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] - b[i];
}
template <>
inline void ew_sub<float>(const float* a, const float* b, float* y, int64_t n) {
  kernels::f32().sub(a, b, y, n);
}

template <typename T>
inline void ew_mul(const T* a, const T* b, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a[i] * b[i];
}
template <>
inline void ew_mul<float>(const float* a, const float* b, float* y, int64_t n) {
  kernels::f32().mul(a, b, y, n);
}

template <typename T>
inline void ew_axpy(T a, const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = y[i] + a * x[i];
}
template <>
inline void ew_axpy<float>(float a, const float* x, float* y, int64_t n) {
  kernels::f32().axpy(a, x, y, n);
}

template <typename T>
inline void ew_affine(const T* x, T* y, T a, T b, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = a * x[i] + b;
}
template <>
inline void ew_affine<float>(const float* x, float* y, float a, float b, int64_t n) {
  kernels::f32().affine(x, y, a, b, n);
}

template <typename T>
inline void ew_relu(const T* x, T* y, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}
template <>
inline void ew_relu<float>(const float* x, float* y, int64_t n) {
  kernels::f32().relu(x, y, n);
}

template <typename T>
inline void ew_relu_bwd(const T* x, const T* g, T* gx, int64_t n) {
  for (int64_t i = 0; i < n; ++i)
    if (x[i] > T(0)) gx[i] = gx[i] + g[i];
}
template <>
inline void ew_relu_bwd<float>(const float* x, const float* g, float* gx, int64_t n) {
  kernels::f32().relu_bwd(x, g, gx, n);
}

template <typename T>
inline void ew_clamp(const T* x, T* y, T lo, T hi, int64_t n) {
  for (int64_t i = 0; i < n; ++i) y[i] = x[i] < lo ? lo : (x[i] > hi ? hi : x[i]);
}
template <>
inline void ew_clamp<float>(const float* x, float* y, float lo, float hi, int64_t n) {
  kernels::f32().clamp(x, y, lo, hi, n);
}

}  // namespace detail

template <typename T>
class Exec {
 public:
  explicit Exec(const Tape& t) : t_(t), val_(t.nodes.size()) {
    for (int id = 0; id < t.size(); ++id)
      if (t.nodes[id].op == Op::leaf) val_[id].assign(t.leafv[id].begin(), t.leafv[id].end());
  }

  // Override a leaf (used by the finite-difference checker).
  void set_leaf(int id, std::vector<T> v) {
    check_data(t_.nodes[id].op == Op::leaf, "set_leaf on non-leaf " + t_.describe(id));
    check_data(int64_t(v.size()) == t_.count(id), "set_leaf size mismatch on " + t_.describe(id));
    val_[id] = std::move(v);
  }

  void forward() {
    for (int id = 0; id < t_.size(); ++id) step(id);
  }

  const std::vector<T>& value(int id) const { return val_[id]; }
  T scalar(int id) const { return val_[id][0]; }
  const Tape& tape() const { return t_; }

 private:
  const Tape& t_;
  std::vector<std::vector<T>> val_;

  void step(int id) {
    const Node& n = t_.nodes[id];
    if (n.op == Op::leaf) return;
    const int m = n.shape[0], c = n.shape[1];
    const int64_t cnt = int64_t(m) * c;
    std::vector<T>& y = val_[id];
    y.assign(size_t(cnt), T(0));
    const T* A = n.a >= 0 ? val_[n.a].data() : nullptr;
    const T* B = n.b >= 0 ? val_[n.b].data() : nullptr;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul:
        kernels::gemm<T>(A, B, y.data(), m, t_.cols(n.a), c, false);
        break;
      case Op::transpose2:
        kernels::transpose<T>(A, y.data(), t_.rows(n.a), t_.cols(n.a));
        break;
      case Op::add:
        detail::ew_add<T>(A, B, y.data(), cnt);
        break;
      case Op::sub:
        detail::ew_sub<T>(A, B, y.data(), cnt);
        break;
      case Op::mul:
        detail::ew_mul<T>(A, B, y.data(), cnt);
        break;
      case Op::add_row:
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) y[size_t(i) * c + j] = A[size_t(i) * c + j] + B[j];
        break;
      case Op::mul_col:
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) y[size_t(i) * c + j] = A[size_t(i) * c + j] * B[i];
        break;
      case Op::scale:
        detail::ew_affine<T>(A, y.data(), T(n.c0), T(0), cnt);
        break;
      case Op::add_const:
        detail::ew_affine<T>(A, y.data(), T(1), T(n.c0), cnt);
        break;
      case Op::relu:
        detail::ew_relu<T>(A, y.data(), cnt);
        break;
      case Op::tanh_act:
        for (int64_t i = 0; i < cnt; ++i) y[i] = std::tanh(A[i]);
        break;
      case Op::sigmoid:
        for (int64_t i = 0; i < cnt; ++i) y[i] = T(1) / (T(1) + std::exp(-A[i]));
        break;
      case Op::exp_elem:
        for (int64_t i = 0; i < cnt; ++i) y[i] = std::exp(A[i]);
        break;
      case Op::log_elem:
        for (int64_t i = 0; i < cnt; ++i) {
          check_numeric(A[i] > T(0), "log of non-positive value at " + t_.describe(id));
          y[i] = std::log(A[i]);
        }
        break;
      case Op::clamp:
        detail::ew_clamp<T>(A, y.data(), T(n.c0), T(n.c1), cnt);
        break;
      case Op::huber:
        for (int64_t i = 0; i < cnt; ++i) {
          T a = A[i] < T(0) ? -A[i] : A[i];
          y[i] = a < T(1) ? T(0.5) * A[i] * A[i] : a - T(0.5);
        }
        break;
      case Op::softmax_rows:
        for (int i = 0; i < m; ++i) {
          const T* r = A + size_t(i) * c;
          T* o = y.data() + size_t(i) * c;
          T mx = r[0];
          for (int j = 1; j < c; ++j) mx = r[j] > mx ? r[j] : mx;
          T den = T(0);
          for (int j = 0; j < c; ++j) {
            o[j] = std::exp(r[j] - mx);
            den = den + o[j];
          }
          for (int j = 0; j < c; ++j) o[j] = o[j] / den;
        }
        break;
      case Op::segment_softmax: {
        std::vector<T> mx(size_t(n.n_out), T(-1e30)), den(size_t(n.n_out), T(0));
        for (int i = 0; i < m; ++i)
          if (A[i] > mx[n.idx[i]]) mx[n.idx[i]] = A[i];
        for (int i = 0; i < m; ++i) {
          y[i] = std::exp(A[i] - mx[n.idx[i]]);
          den[n.idx[i]] = den[n.idx[i]] + y[i];
        }
        for (int i = 0; i < m; ++i) y[i] = y[i] / den[n.idx[i]];
        break;
      }
      case Op::sum_all:
        y[0] = kernels::sum<T>(A, t_.count(n.a));
        break;
      case Op::mean_all:
        y[0] = kernels::sum<T>(A, t_.count(n.a)) / T(t_.count(n.a));
        break;
      case Op::gather_rows:
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < c; ++j) y[size_t(i) * c + j] = A[size_t(n.idx[i]) * c + j];
        break;
      case Op::scatter_add_rows:
        for (size_t i = 0; i < n.idx.size(); ++i)
          for (int j = 0; j < c; ++j)
            y[size_t(n.idx[i]) * c + j] = y[size_t(n.idx[i]) * c + j] + A[i * c + j];
        break;
      case Op::concat_rows: {
        int64_t na = t_.count(n.a);
        for (int64_t i = 0; i < na; ++i) y[i] = A[i];
        int64_t nb = t_.count(n.b);
        for (int64_t i = 0; i < nb; ++i) y[na + i] = B[i];
        break;
      }
      case Op::concat_cols: {
        int ca = t_.cols(n.a), cb = t_.cols(n.b);
        for (int i = 0; i < m; ++i) {
          for (int j = 0; j < ca; ++j) y[size_t(i) * c + j] = A[size_t(i) * ca + j];
          for (int j = 0; j < cb; ++j) y[size_t(i) * c + ca + j] = B[size_t(i) * cb + j];
        }
        break;
      }
      case Op::reshape:
        for (int64_t i = 0; i < cnt; ++i) y[i] = A[i];
        break;
      case Op::cumsum_rows:
        for (int j = 0; j < c; ++j) {
          T acc = T(0);
          for (int i = 0; i < m; ++i) {
            acc = acc + A[size_t(i) * c + j];
            y[size_t(i) * c + j] = acc;
          }
        }
        break;
    }
  }
};

// ---------------------------------------------------------------------------
// Backward executor. Walks the tape in reverse from a scalar loss; gradients
// are kept for every node on a path from a `param` leaf to the loss.

template <typename T>
class Grads {
 public:
  Grads(const Tape& t, const Exec<T>& ex) : t_(t), ex_(ex), g_(t.nodes.size()) {}

  void run(int loss) {
    check_data(t_.count(loss) == 1, "backward from non-scalar " + t_.describe(loss));
    // Which nodes carry gradient: reachable backwards from the loss AND
    // forward-dependent on a param leaf.
    std::vector<char> fromparam(t_.nodes.size(), 0), toloss(t_.nodes.size(), 0);
    for (int id = 0; id < t_.size(); ++id) {
      const Node& n = t_.nodes[id];
      fromparam[id] = n.op == Op::leaf
                          ? char(n.needs_grad)
                          : char((n.a >= 0 && fromparam[n.a]) || (n.b >= 0 && fromparam[n.b]));
    }
    toloss[loss] = 1;
    for (int id = loss; id >= 0; --id) {
      if (!toloss[id]) continue;
      const Node& n = t_.nodes[id];
      if (n.a >= 0) toloss[n.a] = 1;
      if (n.b >= 0) toloss[n.b] = 1;
    }
    live_.assign(t_.nodes.size(), 0);
    for (int id = 0; id < t_.size(); ++id) live_[id] = char(fromparam[id] && toloss[id]);
    check_numeric(std::isfinite(double(ex_.scalar(loss))),
                  "non-finite loss at " + t_.describe(loss));
    for (int id = 0; id < t_.size(); ++id)
      if (live_[id]) g_[id].assign(size_t(t_.count(id)), T(0));
    g_[loss].assign(1, T(1));
    for (int id = loss; id >= 0; --id)
      if (live_[id]) step(id);
  }

  bool has_grad(int id) const { return !g_[id].empty(); }
  const std::vector<T>& grad(int id) const {
    check_data(has_grad(id), "no gradient recorded for " + t_.describe(id));
    return g_[id];
  }

 private:
  const Tape& t_;
  const Exec<T>& ex_;
  std::vector<std::vector<T>> g_;
  std::vector<char> live_;

  T* gp(int id) { return live_[id] ? g_[id].data() : nullptr; }

  void step(int id) {
    const Node& n = t_.nodes[id];
    if (n.op == Op::leaf) return;
    const int m = n.shape[0], c = n.shape[1];
    const int64_t cnt = int64_t(m) * c;
    const T* G = g_[id].data();
    const T* Y = ex_.value(id).data();
    const T* A = n.a >= 0 ? ex_.value(n.a).data() : nullptr;
    const T* B = n.b >= 0 ? ex_.value(n.b).data() : nullptr;
    T* ga = n.a >= 0 ? gp(n.a) : nullptr;
    T* gb = n.b >= 0 ? gp(n.b) : nullptr;
    switch (n.op) {
      case Op::leaf:
        break;
      case Op::matmul: {
        int k = t_.cols(n.a);
        if (ga) {  // dA += G @ B^T
          std::vector<T> bt(size_t(k) * c);
          kernels::transpose<T>(B, bt.data(), k, c);
          kernels::gemm<T>(G, bt.data(), ga, m, c, k, true);
        }
        if (gb) {  // dB += A^T @ G
          std::vector<T> at(size_t(m) * k);
          kernels::transpose<T>(A, at.data(), m, k);
          kernels::gemm<T>(at.data(), G, gb, k, m, c, true);
        }
        break;
      }
      case Op::transpose2:
        if (ga)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j)
              ga[size_t(j) * m + i] = ga[size_t(j) * m + i] + G[size_t(i) * c + j];
        break;
      case Op::add:
        if (ga) detail::ew_axpy<T>(T(1), G, ga, cnt);
        if (gb) detail::ew_axpy<T>(T(1), G, gb, cnt);
        break;
      case Op::sub:
        if (ga) detail::ew_axpy<T>(T(1), G, ga, cnt);
        if (gb) detail::ew_axpy<T>(T(-1), G, gb, cnt);
        break;
      case Op::mul:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i] * B[i];
        if (gb)
          for (int64_t i = 0; i < cnt; ++i) gb[i] = gb[i] + G[i] * A[i];
        break;
      case Op::add_row:
        if (ga) detail::ew_axpy<T>(T(1), G, ga, cnt);
        if (gb)
          for (int j = 0; j < c; ++j) {
            T s = T(0);
            for (int i = 0; i < m; ++i) s = s + G[size_t(i) * c + j];
            gb[j] = gb[j] + s;
          }
        break;
      case Op::mul_col:
        if (ga)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j)
              ga[size_t(i) * c + j] = ga[size_t(i) * c + j] + G[size_t(i) * c + j] * B[i];
        if (gb)
          for (int i = 0; i < m; ++i) {
            T s = T(0);
            for (int j = 0; j < c; ++j) s = s + G[size_t(i) * c + j] * A[size_t(i) * c + j];
            gb[i] = gb[i] + s;
          }
        break;
      case Op::scale:
        if (ga) detail::ew_axpy<T>(T(n.c0), G, ga, cnt);
        break;
      case Op::add_const:
        if (ga) detail::ew_axpy<T>(T(1), G, ga, cnt);
        break;
      case Op::relu:
        if (ga) detail::ew_relu_bwd<T>(A, G, ga, cnt);
        break;
      case Op::tanh_act:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i] * (T(1) - Y[i] * Y[i]);
        break;
      case Op::sigmoid:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i] * Y[i] * (T(1) - Y[i]);
        break;
      case Op::exp_elem:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i] * Y[i];
        break;
      case Op::log_elem:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i] / A[i];
        break;
      case Op::clamp:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i)
            if (A[i] >= T(n.c0) && A[i] <= T(n.c1)) ga[i] = ga[i] + G[i];
        break;
      case Op::huber:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) {
            T a = A[i] < T(0) ? -A[i] : A[i];
            ga[i] = ga[i] + G[i] * (a < T(1) ? A[i] : (A[i] > T(0) ? T(1) : T(-1)));
          }
        break;
      case Op::softmax_rows:
        if (ga)
          for (int i = 0; i < m; ++i) {
            const T* yr = Y + size_t(i) * c;
            const T* gr = G + size_t(i) * c;
            T dotv = T(0);
            for (int j = 0; j < c; ++j) dotv = dotv + gr[j] * yr[j];
            for (int j = 0; j < c; ++j)
              ga[size_t(i) * c + j] = ga[size_t(i) * c + j] + yr[j] * (gr[j] - dotv);
          }
        break;
      case Op::segment_softmax:
        if (ga) {
          std::vector<T> dotv(size_t(n.n_out), T(0));
          for (int i = 0; i < m; ++i) dotv[n.idx[i]] = dotv[n.idx[i]] + G[i] * Y[i];
          for (int i = 0; i < m; ++i) ga[i] = ga[i] + Y[i] * (G[i] - dotv[n.idx[i]]);
        }
        break;
      case Op::sum_all:
        if (ga)
          for (int64_t i = 0; i < t_.count(n.a); ++i) ga[i] = ga[i] + G[0];
        break;
      case Op::mean_all:
        if (ga) {
          T s = G[0] / T(t_.count(n.a));
          for (int64_t i = 0; i < t_.count(n.a); ++i) ga[i] = ga[i] + s;
        }
        break;
      case Op::gather_rows:
        if (ga)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < c; ++j)
              ga[size_t(n.idx[i]) * c + j] = ga[size_t(n.idx[i]) * c + j] + G[size_t(i) * c + j];
        break;
      case Op::scatter_add_rows:
        if (ga)
          for (size_t i = 0; i < n.idx.size(); ++i)
            for (int j = 0; j < c; ++j)
              ga[i * c + j] = ga[i * c + j] + G[size_t(n.idx[i]) * c + j];
        break;
      case Op::concat_rows: {
        int64_t na = t_.count(n.a);
        if (ga)
          for (int64_t i = 0; i < na; ++i) ga[i] = ga[i] + G[i];
        if (gb)
          for (int64_t i = 0; i < t_.count(n.b); ++i) gb[i] = gb[i] + G[na + i];
        break;
      }
      case Op::concat_cols: {
        int ca = t_.cols(n.a), cb = t_.cols(n.b);
        if (ga)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < ca; ++j)
              ga[size_t(i) * ca + j] = ga[size_t(i) * ca + j] + G[size_t(i) * c + j];
        if (gb)
          for (int i = 0; i < m; ++i)
            for (int j = 0; j < cb; ++j)
              gb[size_t(i) * cb + j] = gb[size_t(i) * cb + j] + G[size_t(i) * c + ca + j];
        break;
      }
      case Op::reshape:
        if (ga)
          for (int64_t i = 0; i < cnt; ++i) ga[i] = ga[i] + G[i];
        break;
      case Op::cumsum_rows:
        if (ga)
          for (int j = 0; j < c; ++j) {
            T acc = T(0);
            for (int i = m - 1; i >= 0; --i) {
              acc = acc + G[size_t(i) * c + j];
              ga[size_t(i) * c + j] = ga[size_t(i) * c + j] + acc;
            }
          }
        break;
    }
  }
};

}  // namespace tae
