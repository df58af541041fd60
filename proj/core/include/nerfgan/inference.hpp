// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "nerfgan/features.hpp"
#include "nerfgan/trainer.hpp"

namespace nerfgan {

struct ViewRequest {
  std::vector<Pose> poses;
  std::optional<int> resolution;
  std::optional<int> samples_per_ray;

  void validate() const {
    if (poses.empty()) throw ConfigError("view request: pose list must not be empty");
  }
};

template <class Real>
struct EncodedImage {
  Tensor<Real> z;  // [1, z_dim]
  Pose pose;
};

namespace detail_inference {

template <class Real>
RenderConfig inference_render_config(Trainer<Real>& model, std::optional<int> resolution,
                                     std::optional<int> samples) {
  RenderConfig rc = model.render_config_at(model.state().iteration, /*stratified=*/false);
  if (resolution) {
    rc.height = rc.width = *resolution;
  }
  if (samples) rc.samples_per_ray = *samples;
  rc.validate();
  return rc;
}

template <class Real>
Tensor<Real> image_as_tensor(const ImageTensor& img) {
  Tensor<Real> t({1, 3, img.height, img.width});
  for (std::size_t i = 0; i < img.chw.size(); ++i)
    t.data[static_cast<std::int64_t>(i)] = static_cast<Real>(img.chw[i]);
  return t;
}

}  // namespace detail_inference

template <class Real>
EncodedImage<Real> encode_image(Trainer<Real>& model, const ImageTensor& image) {
  auto [z, pose] = model.encode_batch(detail_inference::image_as_tensor<Real>(image));
  return {std::move(z), Pose{static_cast<double>(pose.data[0]), static_cast<double>(pose.data[1])}};
}

/// Render G(z, pose) through the reconstruction code path (pose-
/// differentiable ray construction, midpoint depths), so that requesting
/// the encoder-predicted pose reproduces the reconstruction bit for bit.
template <class Real>
ImageTensor render_view(Trainer<Real>& model, const Tensor<Real>& z, const Pose& pose,
                        const RenderConfig& rc) {
  Tensor<Real> pitch({1, 1}), yaw({1, 1});
  pitch.data[0] = static_cast<Real>(pose.pitch);
  yaw.data[0] = static_cast<Real>(pose.yaw);
  RngStream rng(0);  // midpoint sampling; the stream is not consumed per-pixel
  const Tensor<Real> batch = model.render_images_posed(z, pitch, yaw, rc, rng);
  return tensor_to_image(batch.template cast<double>(), 0);
}

/// Single-image novel view synthesis: encode once, render every requested
/// pose with the shared content code.
template <class Real>
std::vector<ImageTensor> novel_views(Trainer<Real>& model, const ImageTensor& image,
                                     const ViewRequest& request) {
  request.validate();
  const RenderConfig rc = detail_inference::inference_render_config(
      model, request.resolution, request.samples_per_ray);
  const EncodedImage<Real> enc = encode_image(model, image);
  std::vector<ImageTensor> out;
  out.reserve(request.poses.size());
  for (const Pose& pose : request.poses) out.push_back(render_view(model, enc.z, pose, rc));
  return out;
}

template <class Real>
ImageTensor reconstruct(Trainer<Real>& model, const ImageTensor& image,
                        std::optional<int> resolution = {}) {
  const EncodedImage<Real> enc = encode_image(model, image);
  const RenderConfig rc = detail_inference::inference_render_config(model, resolution, {});
  return render_view(model, enc.z, enc.pose, rc);
}

/// n draws from the priors rendered by the generator.
template <class Real>
std::vector<ImageTensor> sample_unconditional(Trainer<Real>& model, int n, std::uint64_t seed,
                                              std::optional<int> resolution = {}) {
  if (n < 1) throw ConfigError("sample_unconditional: n must be >= 1");
  const RenderConfig rc = detail_inference::inference_render_config(model, resolution, {});
  RngStream rng(seed);
  std::vector<ImageTensor> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    Tensor<Real> z({1, model.config().generator.z_dim});
    const auto zv = sample_latent(rng, model.config().generator.z_dim);
    for (int c = 0; c < model.config().generator.z_dim; ++c)
      z.data[c] = static_cast<Real>(zv[static_cast<std::size_t>(c)]);
    const Pose pose = sample_pose(model.config().prior, rng);
    const std::vector<Pose> poses = {pose};
    const Tensor<Real> img = model.render_images(z, poses, rc, rng);
    out.push_back(tensor_to_image(img.template cast<double>(), 0));
  }
  return out;
}

enum class PoseMode { kInterpolate, kFixed };

/// Encode both endpoints, walk the latent line (and optionally the pose
/// line) on a uniform grid including both ends, render each step.
template <class Real>
std::vector<ImageTensor> interpolate_images(Trainer<Real>& model, const ImageTensor& a,
                                            const ImageTensor& b, int steps, PoseMode pose_mode,
                                            std::optional<int> resolution = {}) {
  if (steps < 2) throw ConfigError("interpolate: needs at least 2 steps");
  const RenderConfig rc = detail_inference::inference_render_config(model, resolution, {});
  const EncodedImage<Real> ea = encode_image(model, a);
  const EncodedImage<Real> eb = encode_image(model, b);
  std::vector<ImageTensor> out;
  out.reserve(static_cast<std::size_t>(steps));
  for (int s = 0; s < steps; ++s) {
    const double t = static_cast<double>(s) / (steps - 1);
    Tensor<Real> z = ea.z;
    z.data = (Real(1) - static_cast<Real>(t)) * ea.z.data + static_cast<Real>(t) * eb.z.data;
    Pose pose = ea.pose;
    if (pose_mode == PoseMode::kInterpolate) {
      pose.pitch = (1 - t) * ea.pose.pitch + t * eb.pose.pitch;
      pose.yaw = (1 - t) * ea.pose.yaw + t * eb.pose.yaw;
    }
    out.push_back(render_view(model, z, pose, rc));
  }
  return out;
}

struct RefineOptions {
  enum class Init { kEncoder, kRandom };
  Init init = Init::kEncoder;
  int iterations = 200;
  double step_size = 5e-3;
  bool optimize_pose = true;
  std::uint64_t seed = 0;  // used only for random init
  std::optional<int> resolution;
};

template <class Real>
struct RefineResult {
  Tensor<Real> z;
  Pose pose;
  ImageTensor reconstruction;
  double initial_loss = 0;
  double final_loss = 0;
};

/// Hybrid inversion: start from the encoder output (or a prior draw) and
/// run Adam on the reconstruction objective over (z, pose) with the
/// generator frozen. z is clamped into [-1,1] after every step; the best
/// iterate (never worse than the initialization) is returned.
template <class Real>
RefineResult<Real> refine_latent(Trainer<Real>& model, const ImageTensor& image,
                                 const RefineOptions& opt) {
  if (opt.iterations < 0) throw ConfigError("refine_latent: iterations must be >= 0");
  RenderConfig rc = detail_inference::inference_render_config(model, opt.resolution, {});
  if (image.height != rc.height)
    rc.height = rc.width = image.height;
  rc.validate();

  const TrainingConfig& cfg = model.config();
  Tensor<Real> z0({1, cfg.generator.z_dim});
  Pose pose0;
  if (opt.init == RefineOptions::Init::kEncoder) {
    const EncodedImage<Real> enc = encode_image(model, image);
    z0 = enc.z;
    pose0 = enc.pose;
  } else {
    RngStream rng(opt.seed);
    const auto zv = sample_latent(rng, cfg.generator.z_dim);
    for (int c = 0; c < cfg.generator.z_dim; ++c)
      z0.data[c] = static_cast<Real>(zv[static_cast<std::size_t>(c)]);
    pose0 = sample_pose(cfg.prior, rng);
  }

  // Latent variables live in a scratch store next to a frozen copy of the
  // generator parameters; checkpoint parameters are never written.
  ParameterStore<Real> scratch;
  for (const auto& name : model.state().params.names_with_prefix("g."))
    scratch.add(name, model.state().params.get(name).shape).data =
        model.state().params.get(name).data;
  scratch.add("lat.z", {1, cfg.generator.z_dim}).data = z0.data;
  scratch.add("lat.pitch", {1, 1}).data[0] = static_cast<Real>(pose0.pitch);
  scratch.add("lat.yaw", {1, 1}).data[0] = static_cast<Real>(pose0.yaw);

  const PerceptualExtractor<Real>& extractor = model.perceptual();
  const Tensor<Real> target = detail_inference::image_as_tensor<Real>(image);
  AdamState<Real> adam;

  RefineResult<Real> best;
  best.initial_loss = -1;
  double best_loss = std::numeric_limits<double>::infinity();
  for (int it = 0; it <= opt.iterations; ++it) {
    Tape<Real> tape;
    ParamLeaves<Real> leaves(tape, scratch);
    auto z = leaves.get("lat.z", true);
    auto pitch = leaves.get("lat.pitch", opt.optimize_pose);
    auto yaw = leaves.get("lat.yaw", opt.optimize_pose);
    RngStream rng(0);
    Generator<Real> gen(cfg.generator);
    auto img = gen.generate_images_posed(tape, z, pitch, yaw, rc, cfg.camera_radius,
                                         cfg.camera_fov, leaves, rng, false);
    auto loss = loss::reconstruction(tape, img, tape.constant(target), cfg.weights, &extractor);
    const double loss_value = static_cast<double>(tape.val(loss).data[0]);
    if (best.initial_loss < 0) best.initial_loss = loss_value;
    if (loss_value < best_loss) {
      best_loss = loss_value;
      best.z = tape.val(z);
      best.pose = Pose{static_cast<double>(tape.val(pitch).data[0]),
                       static_cast<double>(tape.val(yaw).data[0])};
      best.final_loss = loss_value;
    }
    if (it == opt.iterations) break;
    tape.backward(loss);
    adam.step(scratch, leaves, "lat.", opt.step_size, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps);
    auto& zt = scratch.get("lat.z");
    zt.data = zt.data.min(Real(1)).max(Real(-1));
  }

  best.reconstruction = render_view(model, best.z, best.pose, rc);
  return best;
}

}  // namespace nerfgan
