// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Core>
#include <cmath>
#include <functional>
#include <vector>

#include "nerfgan/geometry.hpp"
#include "nerfgan/image.hpp"
#include "nerfgan/rng.hpp"
#include "nerfgan/tape.hpp"

namespace nerfgan {

struct RenderConfig {
  int height = 32;
  int width = 32;
  int samples_per_ray = 24;
  double near = 0.3;
  double far = 2.3;
  bool stratified = true;
  // Background color in [0,1] space, composited behind transparent rays.
  Eigen::Vector3d background = Eigen::Vector3d::Zero();

  void validate() const {
    if (height < 1 || width < 1) throw ConfigError("render config: resolution must be >= 1");
    if (samples_per_ray < 1) throw ConfigError("render config: samples_per_ray must be >= 1");
    if (!(near < far)) throw ConfigError("render config: near must be < far");
  }
};

struct RadianceSample {
  Eigen::Vector3d color;  // [0,1]^3
  double density = 0.0;   // >= 0, per unit length
};

struct CompositeResult {
  Eigen::Vector3d pixel_color;  // [0,1]^3
  std::vector<double> weights;
  double opacity = 0.0;
};

/// n depths in [near, far): equal-width bins, either midpoints or one
/// uniform draw per bin.
inline std::vector<double> stratified_sample(double near, double far, int n, bool stratified,
                                             RngStream& rng) {
  if (!(near < far)) throw ConfigError("stratified_sample: near must be < far");
  if (n < 1) throw ConfigError("stratified_sample: n must be >= 1");
  std::vector<double> depths(static_cast<std::size_t>(n));
  const double bin = (far - near) / n;
  for (int i = 0; i < n; ++i) {
    const double t = stratified ? rng.uniform01() : 0.5;
    depths[static_cast<std::size_t>(i)] = near + (i + t) * bin;
  }
  return depths;
}

/// Transmittance compositing of one ray. Quadrature intervals are
/// delta_i = depth_{i+1} - depth_i with the last interval closed at `far`.
inline CompositeResult composite(const Eigen::Matrix<double, Eigen::Dynamic, 3>& colors,
                                 const Eigen::VectorXd& densities,
                                 const std::vector<double>& depths, double far,
                                 const Eigen::Vector3d& background) {
  const int n = static_cast<int>(depths.size());
  if (colors.rows() != n || densities.size() != n)
    throw std::runtime_error("composite: size mismatch");
  for (int i = 0; i + 1 < n; ++i)
    if (!(depths[static_cast<std::size_t>(i)] < depths[static_cast<std::size_t>(i + 1)]))
      throw std::runtime_error("composite: depths must be strictly increasing");

  CompositeResult out;
  out.weights.resize(static_cast<std::size_t>(n));
  double transmittance = 1.0;
  Eigen::Vector3d acc = Eigen::Vector3d::Zero();
  double opacity = 0.0;
  for (int i = 0; i < n; ++i) {
    const double delta = (i + 1 < n ? depths[static_cast<std::size_t>(i + 1)]
                                    : far) - depths[static_cast<std::size_t>(i)];
    const double alpha = 1.0 - std::exp(-densities[i] * delta);
    const double w = transmittance * alpha;
    out.weights[static_cast<std::size_t>(i)] = w;
    acc += w * colors.row(i).transpose();
    opacity += w;
    transmittance *= (1.0 - alpha);
  }
  out.pixel_color = acc + transmittance * background;
  out.opacity = opacity;
  return out;
}

using FieldFn = std::function<RadianceSample(const Eigen::Vector3d& point,
                                             const Eigen::Vector3d& view_dir)>;

/// Full-frame render of an arbitrary field; output in [-1,1]. Per-ray
/// sample jitter comes from substreams derived from (rng draw, pixel index),
/// so rays are order-independent.
inline ImageTensor render(const FieldFn& field, const Camera& camera, const RenderConfig& cfg,
                          RngStream& rng) {
  cfg.validate();
  const RayBundle rays = generate_rays(camera, cfg.height, cfg.width);
  const std::uint64_t base = rng.next_u64();
  ImageTensor img(cfg.height, cfg.width);
  const int n_rays = cfg.height * cfg.width;
  Eigen::Matrix<double, Eigen::Dynamic, 3> colors(cfg.samples_per_ray, 3);
  Eigen::VectorXd densities(cfg.samples_per_ray);
  for (int r = 0; r < n_rays; ++r) {
    RngStream ray_rng = RngStream(base).derive(static_cast<std::uint64_t>(rays.pixel_index[r]));
    const std::vector<double> depths =
        stratified_sample(cfg.near, cfg.far, cfg.samples_per_ray, cfg.stratified, ray_rng);
    const Eigen::Vector3d origin = rays.origins.row(r).transpose();
    const Eigen::Vector3d dir = rays.directions.row(r).transpose();
    for (int s = 0; s < cfg.samples_per_ray; ++s) {
      const RadianceSample rs = field(origin + depths[static_cast<std::size_t>(s)] * dir, dir);
      colors.row(s) = rs.color.transpose();
      densities[s] = rs.density;
    }
    const CompositeResult cr = composite(colors, densities, depths, cfg.far, cfg.background);
    for (int c = 0; c < 3; ++c)
      img.chw[static_cast<std::size_t>(c) * n_rays + r] =
          static_cast<float>(2.0 * cr.pixel_color[c] - 1.0);
  }
  return img;
}

/// Differentiable compositing over a batch of rays.
/// sigma:[R,S], color:[R*S,3], deltas:[R,S] fixed -> pixel colors [R,3] in [0,1].
template <class Real>
typename Tape<Real>::Var composite_rays(Tape<Real>& tape, typename Tape<Real>::Var sigma,
                                        typename Tape<Real>::Var color,
                                        const Tensor<Real>& deltas,
                                        const Eigen::Vector3d& background) {
  const int R = tape.val(sigma).rows();
  const int S = tape.val(sigma).cols();
  if (tape.val(color).rows() != R * S || tape.val(color).cols() != 3)
    throw std::runtime_error("composite_rays: color must be [R*S,3]");
  if (deltas.rows() != R || deltas.cols() != S)
    throw std::runtime_error("composite_rays: deltas must be [R,S]");

  const Real bg[3] = {static_cast<Real>(background[0]), static_cast<Real>(background[1]),
                      static_cast<Real>(background[2])};
  Tensor<Real> out({R, 3});
  {
    const auto sg = tape.val(sigma).mat(R, S);
    const auto cl = tape.val(color).mat(R * S, 3);
    auto om = out.mat(R, 3);
    for (int r = 0; r < R; ++r) {
      Real T = 1;
      Real acc[3] = {0, 0, 0};
      for (int s = 0; s < S; ++s) {
        const Real alpha = Real(1) - std::exp(-sg(r, s) * deltas.mat(R, S)(r, s));
        const Real w = T * alpha;
        for (int c = 0; c < 3; ++c) acc[c] += w * cl(r * S + s, c);
        T *= (Real(1) - alpha);
      }
      for (int c = 0; c < 3; ++c) om(r, c) = acc[c] + T * bg[c];
    }
  }

  const bool req = tape.node(sigma.id).requires_grad || tape.node(color.id).requires_grad;
  const int isg = sigma.id, icl = color.id;
  const int id = static_cast<int>(tape.size());
  std::function<void(Tape<Real>&)> bwd;
  if (req) {
    const Real bgr = bg[0], bgg = bg[1], bgb = bg[2];
    bwd = [=](Tape<Real>& t) {
      const auto g = t.node(id).grad.mat(R, 3);
      const auto sg = t.node(isg).value.mat(R, S);
      const auto cl = t.node(icl).value.mat(R * S, 3);
      const Real bgv[3] = {bgr, bgg, bgb};
      const bool req_s = t.node(isg).requires_grad;
      const bool req_c = t.node(icl).requires_grad;
      Tensor<Real> ds, dc;
      if (req_s) ds = Tensor<Real>({R, S});
      if (req_c) dc = Tensor<Real>({R * S, 3});
      std::vector<Real> w(static_cast<std::size_t>(S));
      std::vector<Real> Tnext(static_cast<std::size_t>(S));
      for (int r = 0; r < R; ++r) {
        Real T = 1;
        for (int s = 0; s < S; ++s) {
          const Real alpha = Real(1) - std::exp(-sg(r, s) * deltas.mat(R, S)(r, s));
          w[static_cast<std::size_t>(s)] = T * alpha;
          T *= (Real(1) - alpha);
          Tnext[static_cast<std::size_t>(s)] = T;
        }
        if (req_c) {
          auto dcm = dc.mat(R * S, 3);
          for (int s = 0; s < S; ++s)
            for (int c = 0; c < 3; ++c) dcm(r * S + s, c) = w[static_cast<std::size_t>(s)] * g(r, c);
        }
        if (req_s) {
          // d pixel_c / d sigma_j = delta_j * (Tnext_j*(c_j - bg) - suffix_j),
          // suffix_j = sum_{i>j} w_i*(c_i - bg); scan from the back.
          Real suffix[3] = {0, 0, 0};
          auto dsm = ds.mat(R, S);
          for (int s = S - 1; s >= 0; --s) {
            Real acc = 0;
            for (int c = 0; c < 3; ++c)
              acc += g(r, c) * (Tnext[static_cast<std::size_t>(s)] * (cl(r * S + s, c) - bgv[c]) -
                                suffix[c]);
            dsm(r, s) = deltas.mat(R, S)(r, s) * acc;
            for (int c = 0; c < 3; ++c)
              suffix[c] += w[static_cast<std::size_t>(s)] * (cl(r * S + s, c) - bgv[c]);
          }
        }
      }
      if (req_s) t.accum_data(isg, ds.data);
      if (req_c) t.accum_data(icl, dc.data);
    };
  }
  return tape.custom(std::move(out), req, std::move(bwd));
}

}  // namespace nerfgan
