// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/checkpoint.hpp"

#include <sstream>

namespace nerfgan {

TrainingConfig config_from_manifest(const CheckpointManifest& man) {
  TrainingConfig cfg;
  cfg.seed = static_cast<std::uint64_t>(man.field_int("seed"));
  cfg.generator.z_dim = static_cast<int>(man.field_int("z_dim"));
  cfg.generator.mapping_layers = static_cast<int>(man.field_int("mapping_layers"));
  cfg.generator.mapping_width = static_cast<int>(man.field_int("mapping_width"));
  cfg.generator.field_layers = static_cast<int>(man.field_int("field_layers"));
  cfg.generator.field_width = static_cast<int>(man.field_int("field_width"));
  cfg.generator.omega0 = man.field_double("omega0");
  {
    cfg.conv_channels.clear();
    std::stringstream ss(man.field("conv_channels"));
    std::string part;
    while (std::getline(ss, part, ',')) cfg.conv_channels.push_back(std::stoi(part));
  }
  cfg.base_resolution = static_cast<int>(man.field_int("base_resolution"));
  cfg.prior.kind =
      man.field("prior_kind") == "gaussian" ? PriorKind::kGaussian : PriorKind::kUniformHemisphere;
  cfg.prior.mean.pitch = man.field_double("prior_pitch_mean");
  cfg.prior.mean.yaw = man.field_double("prior_yaw_mean");
  cfg.prior.pitch_stddev = man.field_double("prior_pitch_std");
  cfg.prior.yaw_stddev = man.field_double("prior_yaw_std");
  cfg.camera_radius = man.field_double("camera_radius");
  cfg.camera_fov = man.field_double("camera_fov");
  cfg.near_plane = man.field_double("near");
  cfg.far_plane = man.field_double("far");
  cfg.perceptual_seed = static_cast<std::uint64_t>(man.field_int("perceptual_seed"));
  return cfg;
}

}  // namespace nerfgan
