#pragma once

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "tae/array.hpp"
#include "tae/error.hpp"
#include "tae/rng.hpp"
#include "tae/tape.hpp"

namespace tae {

// Ordered collection of named parameter tensors. Insertion order is the
// serialization order, so checkpoints are reproducible byte-for-byte.
class ParamStore {
 public:
  Array& add(const std::string& name, Array a) {
    check_data(index_.emplace(name, items_.size()).second,
               "param store: duplicate parameter '" + name + "'");
    items_.emplace_back(name, std::move(a));
    return items_.back().second;
  }
  bool has(const std::string& name) const { return index_.count(name) > 0; }
  Array& get(const std::string& name) {
    auto it = index_.find(name);
    check_data(it != index_.end(), "param store: unknown parameter '" + name + "'");
    return items_[it->second].second;
  }
  const Array& get(const std::string& name) const {
    return const_cast<ParamStore*>(this)->get(name);
  }
  size_t size() const { return items_.size(); }
  auto begin() { return items_.begin(); }
  auto end() { return items_.end(); }
  auto begin() const { return items_.begin(); }
  auto end() const { return items_.end(); }

  // He-style initialization helpers; the stream is derived from the name so
  // adding parameters never perturbs existing ones.
  Array& add_matrix(const std::string& name, int rows, int cols, Rng& root, double gain = 1.0) {
    Rng r = root.derive(name);
    Array a = Array::zeros({rows, cols});
    double std = gain * std::sqrt(2.0 / rows);
    for (auto& x : a.v) x = float(r.normal(0.0, std));
    return add(name, std::move(a));
  }
  // Small constant instead of zero: a row whose inputs all die would
  // otherwise sit exactly on the relu kink, where gradients are undefined.
  Array& add_bias(const std::string& name, int cols) {
    return add(name, Array::full({1, cols}, 0.01f));
  }

 private:
  std::vector<std::pair<std::string, Array>> items_;
  std::map<std::string, size_t> index_;
};

// Lazily binds store entries to leaves of one tape, so each parameter enters
// a graph exactly once per build.
class TapeParams {
 public:
  TapeParams(Tape& t, ParamStore& ps) : t_(t), ps_(ps) {}
  int operator()(const std::string& name) {
    auto it = ids_.find(name);
    if (it != ids_.end()) return it->second;
    int id = t_.param(ps_.get(name), name);
    ids_.emplace(name, id);
    return id;
  }
  // Same entry exposed as a non-trainable constant (frozen submodule).
  int frozen(const std::string& name) {
    auto it = frozen_ids_.find(name);
    if (it != frozen_ids_.end()) return it->second;
    int id = t_.constant(ps_.get(name), name);
    frozen_ids_.emplace(name, id);
    return id;
  }
  const std::map<std::string, int>& bound() const { return ids_; }

 private:
  Tape& t_;
  ParamStore& ps_;
  std::map<std::string, int> ids_;
  std::map<std::string, int> frozen_ids_;
};

}  // namespace tae
