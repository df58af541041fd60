// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nerfgan/convnet.hpp"
#include "nerfgan/field.hpp"
#include "nerfgan/geometry.hpp"
#include "nerfgan/losses.hpp"
#include "nerfgan/schedule.hpp"

namespace nerfgan {

/// Everything a training run needs: schedule constants, loss weights, prior
/// and camera parameters, architecture sizes, and ablation switches.
/// Defaults are the desk-scale setup: 20k iterations, batch 8, one stage at
/// 32x32 with 24 samples per ray.
struct TrainingConfig {
  std::int64_t total_iterations = 20000;
  int batch_size = 8;
  std::uint64_t seed = 1;
  bool deterministic = true;

  GeneratorArch generator;
  std::vector<int> conv_channels = {32, 64, 128, 128};
  int base_resolution = 32;

  std::vector<StageSpec> stages = {StageSpec{}};

  LossWeights weights;
  bool pose_wraparound = false;
  // Optional R1-style stability penalty on real logits; not part of the
  // training objectives proper and off by default.
  double r1_gamma = 0.0;

  PosePrior prior = PosePrior::gaussian(Pose{1.35, kPi}, 0.15, 0.5);

  double camera_radius = 1.3;
  double camera_fov = kPi / 4;
  double near_plane = 0.3;  // camera_radius - 1 for unit-scale objects
  double far_plane = 2.3;   // camera_radius + 1

  double adam_beta1 = 0.0;
  double adam_beta2 = 0.9;
  double adam_eps = 1e-8;

  std::uint64_t perceptual_seed = 7777;

  AblationFlags ablation;

  ConvNetArch conv_arch() const {
    ConvNetArch a;
    a.channels = conv_channels;
    a.base_resolution = base_resolution;
    return a;
  }

  void validate() const;
};

/// Parse a flat key=value config file ('#' comments, blank lines ok), then
/// apply key=value overrides on top, then validate. Unknown keys and
/// malformed values are errors naming the key. An empty file yields the
/// documented defaults.
TrainingConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Same, but starting from an in-memory config text (used by tests).
TrainingConfig parse_config_text(const std::string& text,
                                 const std::vector<std::string>& overrides = {});

/// Applies an ablation tag: exactly the flag set of the study legend; tags
/// G..J additionally override lambda_recon and disable warm-up.
TrainingConfig ablation_config(char tag, TrainingConfig base);

/// Serialize the resolved configuration back to config-file syntax.
std::string config_to_text(const TrainingConfig& cfg);

}  // namespace nerfgan
