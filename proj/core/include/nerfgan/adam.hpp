// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <map>
#include <string>

#include "nerfgan/param_leaves.hpp"
#include "nerfgan/params.hpp"

namespace nerfgan {

/// Adam moments for one (objective, parameter-group) pair. Each objective
/// keeps its own buffers for the groups it updates, so objectives sharing a
/// network never contaminate each other's moments.
template <class Real>
class AdamState {
 public:
  /// One optimizer step over every gradient in `leaves` whose parameter
  /// name starts with `prefix`. Canonical update:
  ///   m <- b1 m + (1-b1) g;  v <- b2 v + (1-b2) g^2
  ///   p <- p - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
  void step(ParameterStore<Real>& store, const ParamLeaves<Real>& leaves, const std::string& prefix,
            double lr, double beta1, double beta2, double eps) {
    ++t_;
    const Real b1 = static_cast<Real>(beta1), b2 = static_cast<Real>(beta2);
    const Real bias1 = static_cast<Real>(1.0 - std::pow(beta1, static_cast<double>(t_)));
    const Real bias2 = static_cast<Real>(1.0 - std::pow(beta2, static_cast<double>(t_)));
    leaves.for_each_grad(prefix, [&](const std::string& name, const Tensor<Real>& grad) {
      Tensor<Real>& p = store.get(name);
      auto [mit, m_new] = m_.try_emplace(name, Tensor<Real>(p.shape));
      auto [vit, v_new] = v_.try_emplace(name, Tensor<Real>(p.shape));
      auto& m = mit->second.data;
      auto& v = vit->second.data;
      m = b1 * m + (Real(1) - b1) * grad.data;
      v = b2 * v + (Real(1) - b2) * grad.data * grad.data;
      p.data -= static_cast<Real>(lr) * (m / bias1) /
                ((v / bias2).sqrt() + static_cast<Real>(eps));
    });
  }

  std::int64_t steps() const { return t_; }
  void set_steps(std::int64_t t) { t_ = t; }
  std::map<std::string, Tensor<Real>>& m() { return m_; }
  std::map<std::string, Tensor<Real>>& v() { return v_; }
  const std::map<std::string, Tensor<Real>>& m() const { return m_; }
  const std::map<std::string, Tensor<Real>>& v() const { return v_; }

 private:
  std::map<std::string, Tensor<Real>> m_, v_;
  std::int64_t t_ = 0;
};

}  // namespace nerfgan
