// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "nerfgan/geometry.hpp"
#include "nerfgan/param_leaves.hpp"
#include "nerfgan/tape_conv.hpp"

namespace nerfgan {

/// Strided convolutional stack shared by the discriminator and the encoder
/// (the encoder reuses the discriminator backbone with different heads).
struct ConvNetArch {
  std::vector<int> channels = {32, 64, 128, 128};  // one block per entry, stride 2 each
  int base_resolution = 32;

  int final_side() const {
    int side = base_resolution;
    for (std::size_t i = 0; i < channels.size(); ++i) side /= 2;
    return side;
  }
  int feature_dim() const { return channels.back() * final_side() * final_side(); }

  void validate() const {
    if (channels.empty()) throw ConfigError("conv net: needs at least one block");
    int side = base_resolution;
    for (std::size_t i = 0; i < channels.size(); ++i) {
      if (side % 2) throw ConfigError("conv net: resolution not divisible through the stack");
      side /= 2;
    }
    if (side < 1) throw ConfigError("conv net: too many blocks for base resolution");
  }
};

template <class Real>
class ConvBackbone {
 public:
  using Var = typename Tape<Real>::Var;

  ConvBackbone(std::string prefix, ConvNetArch arch) : prefix_(std::move(prefix)), arch_(arch) {
    arch_.validate();
  }

  const ConvNetArch& arch() const { return arch_; }

  void register_params(ParameterStore<Real>& store) const {
    int in = 3;
    for (std::size_t i = 0; i < arch_.channels.size(); ++i) {
      store.add(w(i), {arch_.channels[i], in * 9});
      store.add(b(i), {arch_.channels[i]});
      in = arch_.channels[i];
    }
  }

  void init_params(ParameterStore<Real>& store, const RngStream& root) const {
    const double gain = std::sqrt(2.0 / (1.0 + 0.2 * 0.2));
    int in = 3;
    for (std::size_t i = 0; i < arch_.channels.size(); ++i) {
      const double fan_in = in * 9;
      init_uniform(store.get(w(i)), w(i), root, gain * std::sqrt(3.0 / fan_in));
      init_zero(store.get(b(i)));
      in = arch_.channels[i];
    }
  }

  /// images:[B,3,R,R] in [-1,1] -> flat features [B, feature_dim].
  /// Frames above the base resolution take the documented downsampling path
  /// (repeated 2x box filtering); smaller frames are a configuration error.
  Var forward(Tape<Real>& tape, Var images, ParamLeaves<Real>& leaves, bool train) const {
    // Copy the dims up front; references into the tape go stale as ops are added.
    const std::vector<int> in_shape = tape.val(images).shape;
    if (in_shape.size() != 4 || in_shape[1] != 3)
      throw ConfigError("conv net: input must be [B,3,H,W]");
    int side = in_shape[2];
    if (in_shape[3] != side) throw ConfigError("conv net: input must be square");
    Var x = images;
    while (side > arch_.base_resolution) {
      x = avg_pool2(tape, x);
      side /= 2;
    }
    if (side != arch_.base_resolution)
      throw ConfigError("conv net: input resolution " + std::to_string(in_shape[2]) +
                        " incompatible with base resolution " +
                        std::to_string(arch_.base_resolution));
    for (std::size_t i = 0; i < arch_.channels.size(); ++i) {
      x = conv2d(tape, x, leaves.get(w(i), train), leaves.get(b(i), train), 3, 3, 2, 1);
      x = tape.leaky_relu(x, Real(0.2));
    }
    return tape.reshape(x, {in_shape[0], arch_.feature_dim()});
  }

 private:
  std::string w(std::size_t i) const { return prefix_ + "block" + std::to_string(i) + ".w"; }
  std::string b(std::size_t i) const { return prefix_ + "block" + std::to_string(i) + ".b"; }

  std::string prefix_;
  ConvNetArch arch_;
};

template <class Real>
struct DiscriminatorOutput {
  typename Tape<Real>::Var logit;  // [B,1]
  typename Tape<Real>::Var pose;   // [B,2], unbounded regression output
};

template <class Real>
class Discriminator {
 public:
  using Var = typename Tape<Real>::Var;

  explicit Discriminator(ConvNetArch arch) : backbone_("d.", arch) {}

  const ConvNetArch& arch() const { return backbone_.arch(); }

  void register_params(ParameterStore<Real>& store) const {
    backbone_.register_params(store);
    const int f = backbone_.arch().feature_dim();
    store.add("d.logit.w", {1, f});
    store.add("d.logit.b", {1});
    store.add("d.pose.w", {2, f});
    store.add("d.pose.b", {2});
  }

  void init_params(ParameterStore<Real>& store, const RngStream& root) const {
    backbone_.init_params(store, root);
    const double f = backbone_.arch().feature_dim();
    init_uniform(store.get("d.logit.w"), "d.logit.w", root, 1.0 / std::sqrt(f));
    init_zero(store.get("d.logit.b"));
    init_uniform(store.get("d.pose.w"), "d.pose.w", root, 1.0 / std::sqrt(f));
    init_zero(store.get("d.pose.b"));
  }

  DiscriminatorOutput<Real> forward(Tape<Real>& tape, Var images, ParamLeaves<Real>& leaves,
                                    bool train) const {
    Var feat = backbone_.forward(tape, images, leaves, train);
    Var logit = tape.linear(feat, leaves.get("d.logit.w", train), leaves.get("d.logit.b", train));
    Var pose = tape.linear(feat, leaves.get("d.pose.w", train), leaves.get("d.pose.b", train));
    return {logit, pose};
  }

 private:
  ConvBackbone<Real> backbone_;
};

template <class Real>
struct EncoderOutput {
  typename Tape<Real>::Var z;     // [B,z_dim], elementwise in (-1,1)
  typename Tape<Real>::Var pose;  // [B,2]
};

template <class Real>
class Encoder {
 public:
  using Var = typename Tape<Real>::Var;

  Encoder(ConvNetArch arch, int z_dim, PriorKind prior_kind)
      : backbone_("e.", arch), z_dim_(z_dim), prior_kind_(prior_kind) {}

  const ConvNetArch& arch() const { return backbone_.arch(); }
  int z_dim() const { return z_dim_; }

  void register_params(ParameterStore<Real>& store) const {
    backbone_.register_params(store);
    const int f = backbone_.arch().feature_dim();
    store.add("e.z.w", {z_dim_, f});
    store.add("e.z.b", {z_dim_});
    store.add("e.pose.w", {2, f});
    store.add("e.pose.b", {2});
  }

  void init_params(ParameterStore<Real>& store, const RngStream& root) const {
    backbone_.init_params(store, root);
    const double f = backbone_.arch().feature_dim();
    init_uniform(store.get("e.z.w"), "e.z.w", root, 1.0 / std::sqrt(f));
    init_zero(store.get("e.z.b"));
    init_uniform(store.get("e.pose.w"), "e.pose.w", root, 1.0 / std::sqrt(f));
    init_zero(store.get("e.pose.b"));
  }

  /// The latent head ends in tanh so predictions stay inside the prior
  /// support. The pose head is linear for gaussian priors and squashed into
  /// the pitch/yaw box for hemisphere priors.
  EncoderOutput<Real> forward(Tape<Real>& tape, Var images, ParamLeaves<Real>& leaves,
                              bool train) const {
    Var feat = backbone_.forward(tape, images, leaves, train);
    Var z = tape.tanh_(tape.linear(feat, leaves.get("e.z.w", train), leaves.get("e.z.b", train)));
    Var pose = tape.linear(feat, leaves.get("e.pose.w", train), leaves.get("e.pose.b", train));
    if (prior_kind_ == PriorKind::kUniformHemisphere) {
      const int B = tape.val(pose).rows();
      Var pitch = tape.affine(tape.sigmoid(tape.slice_cols(pose, 0, 1)), Real(kPi / 2), Real(0));
      Var yaw = tape.affine(tape.sigmoid(tape.slice_cols(pose, 1, 2)), Real(2 * kPi), Real(0));
      (void)B;
      pose = tape.concat_cols(pitch, yaw);
    }
    return {z, pose};
  }

 private:
  ConvBackbone<Real> backbone_;
  int z_dim_;
  PriorKind prior_kind_;
};

}  // namespace nerfgan
