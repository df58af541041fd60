// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nerfgan/geometry.hpp"
#include "nerfgan/param_leaves.hpp"
#include "nerfgan/params.hpp"
#include "nerfgan/renderer.hpp"
#include "nerfgan/tape.hpp"

namespace nerfgan {

struct GeneratorArch {
  int z_dim = 64;
  int mapping_layers = 3;  // hidden layers of the latent-to-FiLM network
  int mapping_width = 256;
  int field_layers = 4;    // sinusoidal trunk layers
  int field_width = 64;
  double omega0 = 30.0;    // base frequency of the sinusoidal layers

  // Sinusoidal layers carrying FiLM parameters: trunk plus one view-
  // conditioned color layer.
  int film_layers() const { return field_layers + 1; }
  int film_dim() const { return film_layers() * field_width; }
};

/// Per-batch FiLM conditioning: one frequency and one phase row per image.
template <class Real>
struct FilmParams {
  typename Tape<Real>::Var gamma;  // [B, film_dim]
  typename Tape<Real>::Var beta;   // [B, film_dim]
};

/// Latent-to-FiLM mapping network plus the FiLM-conditioned sinusoidal
/// radiance field. Parameters live in a ParameterStore under the "g." prefix.
template <class Real>
class Generator {
 public:
  using Var = typename Tape<Real>::Var;

  explicit Generator(GeneratorArch arch) : arch_(arch) {}

  const GeneratorArch& arch() const { return arch_; }

  void register_params(ParameterStore<Real>& store) const {
    int in = arch_.z_dim;
    for (int i = 0; i < arch_.mapping_layers; ++i) {
      store.add(map_w(i), {arch_.mapping_width, in});
      store.add(map_b(i), {arch_.mapping_width});
      in = arch_.mapping_width;
    }
    store.add("g.map.head.w", {2 * arch_.film_dim(), in});
    store.add("g.map.head.b", {2 * arch_.film_dim()});

    store.add("g.field.0.w", {arch_.field_width, 3});
    store.add("g.field.0.b", {arch_.field_width});
    for (int i = 1; i < arch_.field_layers; ++i) {
      store.add(field_w(i), {arch_.field_width, arch_.field_width});
      store.add(field_b(i), {arch_.field_width});
    }
    store.add("g.color.mix.w", {arch_.field_width, arch_.field_width + 3});
    store.add("g.color.mix.b", {arch_.field_width});
    store.add("g.color.out.w", {3, arch_.field_width});
    store.add("g.color.out.b", {3});
    store.add("g.density.w", {1, arch_.field_width});
    store.add("g.density.b", {1});
  }

  void init_params(ParameterStore<Real>& store, const RngStream& root) const {
    const double leaky_gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
    int in = arch_.z_dim;
    for (int i = 0; i < arch_.mapping_layers; ++i) {
      init_uniform(store.get(map_w(i)), map_w(i), root, leaky_gain * std::sqrt(3.0 / in));
      init_uniform(store.get(map_b(i)), map_b(i), root, 1.0 / std::sqrt(double(in)));
      in = arch_.mapping_width;
    }
    // Small head so frequencies start near omega0 and phases near zero.
    init_uniform(store.get("g.map.head.w"), "g.map.head.w", root, 0.3 / std::sqrt(double(in)));
    init_zero(store.get("g.map.head.b"));

    // Sinusoidal init: first layer +-1/fan_in, hidden +-sqrt(6/fan_in)/omega0.
    init_uniform(store.get("g.field.0.w"), "g.field.0.w", root, 1.0 / 3.0);
    init_uniform(store.get("g.field.0.b"), "g.field.0.b", root, 1.0 / std::sqrt(3.0));
    const double hidden = std::sqrt(6.0 / arch_.field_width) / arch_.omega0;
    for (int i = 1; i < arch_.field_layers; ++i) {
      init_uniform(store.get(field_w(i)), field_w(i), root, hidden);
      init_uniform(store.get(field_b(i)), field_b(i), root, 1.0 / std::sqrt(double(arch_.field_width)));
    }
    const double mix = std::sqrt(6.0 / (arch_.field_width + 3)) / arch_.omega0;
    init_uniform(store.get("g.color.mix.w"), "g.color.mix.w", root, mix);
    init_uniform(store.get("g.color.mix.b"), "g.color.mix.b", root,
                 1.0 / std::sqrt(double(arch_.field_width + 3)));
    init_uniform(store.get("g.color.out.w"), "g.color.out.w", root, hidden);
    init_zero(store.get("g.color.out.b"));
    init_uniform(store.get("g.density.w"), "g.density.w", root, hidden);
    init_zero(store.get("g.density.b"));
  }

  /// z:[B,z_dim] -> per-image FiLM frequencies/phases. Frequencies are
  /// omega0 * (1 + head_output) so an untrained head lands on the plain
  /// sinusoidal-network behavior.
  FilmParams<Real> mapping_network(Tape<Real>& tape, Var z, ParamLeaves<Real>& leaves,
                                   bool train) const {
    if (tape.val(z).cols() != arch_.z_dim)
      throw ConfigError("mapping_network: z dimension mismatch (expected " +
                        std::to_string(arch_.z_dim) + ", got " +
                        std::to_string(tape.val(z).cols()) + ")");
    Var h = z;
    for (int i = 0; i < arch_.mapping_layers; ++i) {
      h = tape.leaky_relu(tape.linear(h, leaves.get(map_w(i), train),
                                      leaves.get(map_b(i), train)),
                          Real(0.2));
    }
    Var head = tape.linear(h, leaves.get("g.map.head.w", train),
                           leaves.get("g.map.head.b", train));
    const int fd = arch_.film_dim();
    Var raw_gamma = tape.slice_cols(head, 0, fd);
    Var beta = tape.slice_cols(head, fd, 2 * fd);
    Var gamma = tape.affine(raw_gamma, Real(arch_.omega0), Real(arch_.omega0));
    return {gamma, beta};
  }

  struct FieldOutput {
    Var sigma;  // [N,1], nonnegative (softplus)
    Var rgb;    // [N,3], in (0,1) (sigmoid)
  };

  /// Evaluate the field at N points grouped in contiguous blocks of
  /// `rows_per_block` points per image. Every sinusoidal layer computes
  /// sin(gamma * (W x + b) + beta); density ignores the view direction.
  FieldOutput field_forward(Tape<Real>& tape, Var points, Var view_dirs, const FilmParams<Real>& film,
                            int rows_per_block, ParamLeaves<Real>& leaves, bool train) const {
    const int w = arch_.field_width;
    Var h = points;
    for (int i = 0; i < arch_.field_layers; ++i) {
      h = tape.linear(h, leaves.get(i == 0 ? std::string("g.field.0.w") : field_w(i), train),
                      leaves.get(i == 0 ? std::string("g.field.0.b") : field_b(i), train));
      h = tape.sin_(tape.film(h, tape.slice_cols(film.gamma, i * w, (i + 1) * w),
                              tape.slice_cols(film.beta, i * w, (i + 1) * w), rows_per_block));
    }
    Var sigma = tape.softplus(tape.linear(h, leaves.get("g.density.w", train),
                                          leaves.get("g.density.b", train)));
    Var mixed = tape.linear(tape.concat_cols(h, view_dirs),
                            leaves.get("g.color.mix.w", train),
                            leaves.get("g.color.mix.b", train));
    const int li = arch_.field_layers;
    mixed = tape.sin_(tape.film(mixed, tape.slice_cols(film.gamma, li * w, (li + 1) * w),
                                tape.slice_cols(film.beta, li * w, (li + 1) * w), rows_per_block));
    Var rgb = tape.sigmoid(tape.linear(mixed, leaves.get("g.color.out.w", train),
                                       leaves.get("g.color.out.b", train)));
    return {sigma, rgb};
  }

  /// Render a batch of images from latent codes and poses.
  /// Returns [B,3,H,W] in [-1,1]. Depth jitter is drawn from per-pixel
  /// substreams of one base draw, matching the plain render() path.
  Var generate_images(Tape<Real>& tape, Var z, const std::vector<Pose>& poses,
                      const RenderConfig& cfg, double camera_radius, double camera_fov,
                      ParamLeaves<Real>& leaves, RngStream& rng, bool train) const {
    cfg.validate();
    const int B = static_cast<int>(poses.size());
    if (tape.val(z).rows() != B) throw ConfigError("generate_images: z/pose batch mismatch");
    const int hw = cfg.height * cfg.width;
    const int S = cfg.samples_per_ray;
    const int N = B * hw * S;

    Tensor<Real> points({N, 3});
    Tensor<Real> dirs({N, 3});
    Tensor<Real> deltas({B * hw, S});
    const std::uint64_t base = rng.next_u64();
    std::vector<double> depths(static_cast<std::size_t>(S));
    for (int b = 0; b < B; ++b) {
      const Camera cam = pose_to_camera(poses[static_cast<std::size_t>(b)], camera_radius, camera_fov);
      const RayBundle rays = generate_rays(cam, cfg.height, cfg.width);
      for (int r = 0; r < hw; ++r) {
        RngStream ray_rng =
            RngStream(base).derive(static_cast<std::uint64_t>(b) * static_cast<std::uint64_t>(hw) +
                                   static_cast<std::uint64_t>(rays.pixel_index[r]));
        {
          const double bin = (cfg.far - cfg.near) / S;
          for (int s = 0; s < S; ++s) {
            const double t = cfg.stratified ? ray_rng.uniform01() : 0.5;
            depths[static_cast<std::size_t>(s)] = cfg.near + (s + t) * bin;
          }
        }
        const int ray_idx = b * hw + r;
        for (int s = 0; s < S; ++s) {
          const double d = depths[static_cast<std::size_t>(s)];
          const double next = s + 1 < S ? depths[static_cast<std::size_t>(s + 1)] : cfg.far;
          deltas.mat(B * hw, S)(ray_idx, s) = static_cast<Real>(next - d);
          const std::int64_t row = static_cast<std::int64_t>(ray_idx) * S + s;
          for (int c = 0; c < 3; ++c) {
            points.data[row * 3 + c] =
                static_cast<Real>(rays.origins(r, c) + d * rays.directions(r, c));
            dirs.data[row * 3 + c] = static_cast<Real>(rays.directions(r, c));
          }
        }
      }
    }

    FilmParams<Real> film = mapping_network(tape, z, leaves, train);
    Var points_v = tape.constant(std::move(points));
    Var dirs_v = tape.constant(std::move(dirs));
    return render_tail(tape, points_v, dirs_v, film, deltas, cfg, B, leaves, train);
  }

  /// Same render, but with the camera pose as differentiable inputs
  /// (pitch/yaw as [B,1] Vars). Rays are built on the tape from the pose
  /// trigonometry, so gradients reach the pose. Shares depth sampling with
  /// generate_images: identical inputs give bit-identical pixels.
  Var generate_images_posed(Tape<Real>& tape, Var z, Var pitch, Var yaw, const RenderConfig& cfg,
                            double camera_radius, double camera_fov, ParamLeaves<Real>& leaves,
                            RngStream& rng, bool train) const {
    cfg.validate();
    const int B = tape.val(pitch).rows();
    if (tape.val(z).rows() != B || tape.val(yaw).rows() != B)
      throw ConfigError("generate_images_posed: batch mismatch");
    const int hw = cfg.height * cfg.width;
    const int S = cfg.samples_per_ray;

    // Pixel-plane offsets (u right, v up) and per-ray depths as constants.
    Tensor<Real> u_col({hw, 1}), v_col({hw, 1});
    {
      const double half = std::tan(camera_fov / 2);
      const double aspect = static_cast<double>(cfg.width) / cfg.height;
      for (int i = 0; i < cfg.height; ++i)
        for (int j = 0; j < cfg.width; ++j) {
          u_col.data[i * cfg.width + j] =
              static_cast<Real>((2.0 * (j + 0.5) / cfg.width - 1.0) * half * aspect);
          v_col.data[i * cfg.width + j] =
              static_cast<Real>((1.0 - 2.0 * (i + 0.5) / cfg.height) * half);
        }
    }
    Tensor<Real> depth_col({B * hw * S, 1});
    Tensor<Real> deltas({B * hw, S});
    const std::uint64_t base = rng.next_u64();
    std::vector<double> depths(static_cast<std::size_t>(S));
    for (int b = 0; b < B; ++b)
      for (int r = 0; r < hw; ++r) {
        RngStream ray_rng =
            RngStream(base).derive(static_cast<std::uint64_t>(b) * static_cast<std::uint64_t>(hw) +
                                   static_cast<std::uint64_t>(r));
        const double bin = (cfg.far - cfg.near) / S;
        for (int s = 0; s < S; ++s) {
          const double t = cfg.stratified ? ray_rng.uniform01() : 0.5;
          depths[static_cast<std::size_t>(s)] = cfg.near + (s + t) * bin;
        }
        const int ray_idx = b * hw + r;
        for (int s = 0; s < S; ++s) {
          const double d = depths[static_cast<std::size_t>(s)];
          const double next = s + 1 < S ? depths[static_cast<std::size_t>(s + 1)] : cfg.far;
          deltas.mat(B * hw, S)(ray_idx, s) = static_cast<Real>(next - d);
          depth_col.data[static_cast<std::int64_t>(ray_idx) * S + s] = static_cast<Real>(d);
        }
      }

    Var u_v = tape.constant(u_col);
    Var v_v = tape.constant(v_col);
    std::vector<Var> point_parts, dir_parts;
    for (int b = 0; b < B; ++b) {
      Var th = tape.slice_rows(pitch, b, b + 1);
      Var ya = tape.slice_rows(yaw, b, b + 1);
      Var sp = tape.sin_(th), cp = tape.cos_(th);
      Var sy = tape.sin_(ya), cy = tape.cos_(ya);
      Var zero = tape.constant(Tensor<Real>({1, 1}));
      // Look-at frame on the sphere (world-up +z):
      //   forward  = (-sp*cy, -sp*sy, -cp)
      //   right    = (-sy,     cy,     0 )
      //   up       = (-cp*cy, -cp*sy,  sp)
      Var fwd = tape.concat_cols(
          tape.concat_cols(tape.mul_scalar(tape.mul(sp, cy), Real(-1)),
                           tape.mul_scalar(tape.mul(sp, sy), Real(-1))),
          tape.mul_scalar(cp, Real(-1)));
      Var right = tape.concat_cols(tape.concat_cols(tape.mul_scalar(sy, Real(-1)), cy), zero);
      Var up = tape.concat_cols(tape.concat_cols(tape.mul_scalar(tape.mul(cp, cy), Real(-1)),
                                                 tape.mul_scalar(tape.mul(cp, sy), Real(-1))),
                                sp);
      Var pos = tape.mul_scalar(fwd, Real(-camera_radius));

      Var d_unnorm = tape.add(tape.row_tile(fwd, hw),
                              tape.add(tape.mul_colvec(tape.row_tile(right, hw), u_v),
                                       tape.mul_colvec(tape.row_tile(up, hw), v_v)));
      Var inv_norm = tape.rsqrt(tape.sum_rows(tape.square(d_unnorm)));
      Var dir = tape.mul_colvec(d_unnorm, inv_norm);        // [hw,3] unit
      Var dir_rep = tape.repeat_rows(dir, S);               // [hw*S,3]
      Var depth_b = tape.constant(
          Tensor<Real>({hw * S, 1},
                       depth_col.data.segment(static_cast<std::int64_t>(b) * hw * S, hw * S)));
      Var pts = tape.add(tape.row_tile(pos, hw * S), tape.mul_colvec(dir_rep, depth_b));
      point_parts.push_back(pts);
      dir_parts.push_back(dir_rep);
    }
    Var points_v = point_parts.size() == 1
                       ? point_parts[0]
                       : tape.reshape(tape.stack(point_parts), {B * hw * S, 3});
    Var dirs_v =
        dir_parts.size() == 1 ? dir_parts[0] : tape.reshape(tape.stack(dir_parts), {B * hw * S, 3});

    FilmParams<Real> film = mapping_network(tape, z, leaves, train);
    return render_tail(tape, points_v, dirs_v, film, deltas, cfg, B, leaves, train);
  }

 private:
  Var render_tail(Tape<Real>& tape, Var points, Var dirs, const FilmParams<Real>& film,
                  const Tensor<Real>& deltas, const RenderConfig& cfg, int B,
                  ParamLeaves<Real>& leaves, bool train) const {
    const int hw = cfg.height * cfg.width;
    const int S = cfg.samples_per_ray;
    FieldOutput f = field_forward(tape, points, dirs, film, hw * S, leaves, train);
    Var sigma = tape.reshape(f.sigma, {B * hw, S});
    Var pixels = composite_rays(tape, sigma, f.rgb, deltas, cfg.background);  // [B*hw, 3]

    std::vector<Var> per_image;
    per_image.reserve(static_cast<std::size_t>(B));
    for (int b = 0; b < B; ++b)
      per_image.push_back(tape.transpose(tape.slice_rows(pixels, b * hw, (b + 1) * hw)));
    Var batch = tape.reshape(tape.stack(per_image), {B, 3, cfg.height, cfg.width});
    return tape.affine(batch, Real(2), Real(-1));  // [0,1] -> [-1,1]
  }

  static std::string map_w(int i) { return "g.map." + std::to_string(i) + ".w"; }
  static std::string map_b(int i) { return "g.map." + std::to_string(i) + ".b"; }
  static std::string field_w(int i) { return "g.field." + std::to_string(i) + ".w"; }
  static std::string field_b(int i) { return "g.field." + std::to_string(i) + ".b"; }

  GeneratorArch arch_;
};

}  // namespace nerfgan
