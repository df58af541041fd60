// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include "nerfgan/params.hpp"
#include "nerfgan/tape.hpp"

namespace nerfgan {

/// Binds a ParameterStore to one tape, memoizing one leaf per parameter so
/// that repeated forwards (e.g. two renders in one objective) accumulate
/// gradients into a single node.
template <class Real>
class ParamLeaves {
 public:
  using Var = typename Tape<Real>::Var;

  ParamLeaves(Tape<Real>& tape, ParameterStore<Real>& store) : tape_(tape), store_(store) {}

  Var get(const std::string& name, bool train) {
    auto it = bound_.find(name);
    if (it != bound_.end()) {
      if (it->second.train != train)
        throw std::runtime_error("ParamLeaves: inconsistent trainability for " + name);
      return it->second.var;
    }
    Var v = tape_.leaf(store_.get(name), train);
    bound_.emplace(name, Binding{v, train});
    return v;
  }

  /// Visit accumulated gradients of all bound trainable parameters whose
  /// name starts with `prefix`, in name order.
  template <class Fn>
  void for_each_grad(const std::string& prefix, Fn&& fn) const {
    for (const auto& [name, binding] : bound_) {
      if (!binding.train) continue;
      if (name.rfind(prefix, 0) != 0) continue;
      if (!tape_.has_grad(binding.var)) continue;
      fn(name, tape_.grad(binding.var));
    }
  }

  bool any_bound_with_prefix(const std::string& prefix) const {
    for (const auto& [name, binding] : bound_)
      if (name.rfind(prefix, 0) == 0) return true;
    return false;
  }

  ParameterStore<Real>& store() { return store_; }
  Tape<Real>& tape() { return tape_; }

 private:
  struct Binding {
    Var var;
    bool train;
  };
  Tape<Real>& tape_;
  ParameterStore<Real>& store_;
  std::map<std::string, Binding> bound_;
};

}  // namespace nerfgan
