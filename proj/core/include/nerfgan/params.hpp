// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "nerfgan/rng.hpp"
#include "nerfgan/tensor.hpp"

namespace nerfgan {

inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Named flat arrays of trainable values. std::map keeps iteration order
/// stable by name, which the checkpoint format and deterministic updates
/// rely on.
template <class Real>
class ParameterStore {
 public:
  Tensor<Real>& add(const std::string& name, std::vector<int> shape) {
    auto [it, inserted] = params_.emplace(name, Tensor<Real>(std::move(shape)));
    if (!inserted) throw std::runtime_error("ParameterStore: duplicate parameter " + name);
    return it->second;
  }

  Tensor<Real>& get(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("ParameterStore: unknown parameter " + name);
    return it->second;
  }
  const Tensor<Real>& get(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw std::runtime_error("ParameterStore: unknown parameter " + name);
    return it->second;
  }
  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  std::map<std::string, Tensor<Real>>& all() { return params_; }
  const std::map<std::string, Tensor<Real>>& all() const { return params_; }

  std::vector<std::string> names_with_prefix(const std::string& prefix) const {
    std::vector<std::string> out;
    for (const auto& [name, t] : params_)
      if (name.rfind(prefix, 0) == 0) out.push_back(name);
    return out;
  }

  std::int64_t total_size() const {
    std::int64_t n = 0;
    for (const auto& [name, t] : params_) n += t.numel();
    return n;
  }

  template <class OtherReal>
  ParameterStore<OtherReal> cast() const {
    ParameterStore<OtherReal> out;
    for (const auto& [name, t] : params_) out.add(name, t.shape).data = t.data.template cast<OtherReal>();
    return out;
  }

 private:
  std::map<std::string, Tensor<Real>> params_;
};

/// Uniform(-bound, bound) fill from a stream derived from the parameter
/// name, so initialization does not depend on creation order. Values are
/// drawn in double and cast, keeping f32/f64 builds consistent.
template <class Real>
void init_uniform(Tensor<Real>& t, const std::string& name, const RngStream& root, double bound) {
  RngStream rng = root.derive(fnv1a(name));
  for (std::int64_t i = 0; i < t.numel(); ++i)
    t.data[i] = static_cast<Real>(rng.uniform(-bound, bound));
}

template <class Real>
void init_zero(Tensor<Real>& t) {
  t.data.setZero();
}

}  // namespace nerfgan
