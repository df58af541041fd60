// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace nerfgan {

template <class Real>
using MatX = Eigen::Matrix<Real, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Real>
using ArrX = Eigen::Array<Real, Eigen::Dynamic, 1>;

/// Dense n-d tensor with row-major (last index fastest) flat storage.
/// Shapes are small metadata; all math happens on 2-d Eigen maps.
template <class Real>
struct Tensor {
  std::vector<int> shape;
  ArrX<Real> data;

  Tensor() = default;
  explicit Tensor(std::vector<int> s) : shape(std::move(s)) { data.setZero(numel_of(shape)); }
  Tensor(std::vector<int> s, ArrX<Real> d) : shape(std::move(s)), data(std::move(d)) {
    if (data.size() != numel_of(shape)) throw std::runtime_error("Tensor: shape/data size mismatch");
  }

  static Tensor zeros(std::vector<int> s) { return Tensor(std::move(s)); }
  static Tensor scalar(Real v) {
    Tensor t({1, 1});
    t.data[0] = v;
    return t;
  }

  static std::int64_t numel_of(const std::vector<int>& s) {
    std::int64_t n = 1;
    for (int d : s) {
      if (d < 0) throw std::runtime_error("Tensor: negative dimension");
      n *= d;
    }
    return n;
  }

  std::int64_t numel() const { return data.size(); }
  int dim(int i) const { return shape.at(static_cast<std::size_t>(i)); }
  int ndim() const { return static_cast<int>(shape.size()); }

  int rows() const {
    if (shape.empty()) return 1;
    return shape[0];
  }
  int cols() const {
    std::int64_t c = 1;
    for (std::size_t i = 1; i < shape.size(); ++i) c *= shape[i];
    return static_cast<int>(c);
  }

  /// View the flat data as a (rows x cols) row-major matrix.
  Eigen::Map<MatX<Real>> mat(int r, int c) {
    if (static_cast<std::int64_t>(r) * c != numel()) throw std::runtime_error("Tensor::mat: bad view");
    return Eigen::Map<MatX<Real>>(data.data(), r, c);
  }
  Eigen::Map<const MatX<Real>> mat(int r, int c) const {
    if (static_cast<std::int64_t>(r) * c != numel()) throw std::runtime_error("Tensor::mat: bad view");
    return Eigen::Map<const MatX<Real>>(data.data(), r, c);
  }
  Eigen::Map<MatX<Real>> mat() { return mat(rows(), cols()); }
  Eigen::Map<const MatX<Real>> mat() const { return mat(rows(), cols()); }

  Real& at(std::int64_t i) { return data[i]; }
  Real at(std::int64_t i) const { return data[i]; }

  template <class OtherReal>
  Tensor<OtherReal> cast() const {
    Tensor<OtherReal> out;
    out.shape = shape;
    out.data = data.template cast<OtherReal>();
    return out;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }
};

inline std::string shape_string(const std::vector<int>& s) {
  std::string out = "(";
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(s[i]);
  }
  return out + ")";
}

}  // namespace nerfgan
