#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tae/error.hpp"

namespace tae {

// Dense row-major array. Training runs on float; the gradient checker replays
// the same tape at double precision.
template <typename T>
struct ArrayT {
  std::vector<int> shape;
  std::vector<T> v;

  ArrayT() = default;
  ArrayT(std::vector<int> s, std::vector<T> vals) : shape(std::move(s)), v(std::move(vals)) {
    check_data(int64_t(v.size()) == count(shape), "array: value count does not match shape");
  }

  static int64_t count(const std::vector<int>& s) {
    int64_t n = 1;
    for (int e : s) {
      check_data(e > 0, "array: non-positive extent");
      n *= e;
    }
    return n;
  }

  static ArrayT zeros(std::vector<int> s) {
    ArrayT a;
    int64_t n = count(s);
    a.shape = std::move(s);
    a.v.assign(size_t(n), T(0));
    return a;
  }

  static ArrayT full(std::vector<int> s, T value) {
    ArrayT a = zeros(std::move(s));
    for (auto& x : a.v) x = value;
    return a;
  }

  // Validating constructor for values crossing a trust boundary (file loads,
  // user input). NaN/Inf rejected.
  static ArrayT checked(std::vector<int> s, std::vector<T> vals, const std::string& what) {
    ArrayT a(std::move(s), std::move(vals));
    check_numeric(a.all_finite(), "array '" + what + "' contains non-finite values");
    return a;
  }

  int64_t size() const { return int64_t(v.size()); }
  int rank() const { return int(shape.size()); }
  int rows() const { return shape.empty() ? 0 : shape[0]; }
  int cols() const {
    if (shape.size() == 1) return 1;
    int64_t c = 1;
    for (size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return int(c);
  }

  T& at(int r, int c) { return v[size_t(r) * cols() + c]; }
  T at(int r, int c) const { return v[size_t(r) * cols() + c]; }

  bool all_finite() const {
    for (T x : v)
      if (!std::isfinite(double(x))) return false;
    return true;
  }

  bool same_shape(const ArrayT& o) const { return shape == o.shape; }

  friend bool operator==(const ArrayT& a, const ArrayT& b) {
    return a.shape == b.shape && a.v == b.v;
  }
};

using Array = ArrayT<float>;
using DArray = ArrayT<double>;

inline DArray to_double(const Array& a) {
  DArray d;
  d.shape = a.shape;
  d.v.assign(a.v.begin(), a.v.end());
  return d;
}

inline Array to_float(const DArray& a) {
  Array f;
  f.shape = a.shape;
  f.v.reserve(a.v.size());
  for (double x : a.v) f.v.push_back(float(x));
  return f;
}

inline std::string shape_str(const std::vector<int>& s) {
  std::string out = "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + "]";
}

}  // namespace tae
