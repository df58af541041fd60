// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nerfgan/geometry.hpp"

namespace nerfgan {

/// Named ablation switches. Tags mirror the study legend:
///   A naive inversion against a frozen pretrained GAN
///   B auto-encoder (latent-prior GAN objectives dropped)
///   C no inversion objective
///   D no conditional adversarial objective
///   E no warm-up, F permanent warm-up
///   G..J warm-up replaced by lambda_recon in {1, 0.1, 0.01, 0.001}
struct AblationFlags {
  char tag = 0;  // 0 = full configuration
  bool freeze_generator = false;
  bool drop_latent_gan = false;
  bool no_inversion = false;
  bool no_cond_adversarial = false;
  bool no_warmup = false;
  bool always_warmup = false;
  bool lambda_recon_override = false;
  double lambda_recon_value = 0.0;

  bool any() const { return tag != 0; }
};

AblationFlags ablation_flags_from_tag(char tag);

/// True when the encoder is excluded from the reconstruction/conditional
/// updates. The base rule is the first half of training, floor(total/2);
/// the switch happens before the step with index total/2.
bool warmup_active(std::int64_t iteration, std::int64_t total, const AblationFlags& flags);

/// Piecewise-constant training stage: resolution, per-ray samples and
/// per-network learning rates from a given iteration on.
struct StageSpec {
  std::int64_t start_iteration = 0;
  int resolution = 32;
  int samples_per_ray = 24;
  double lr_g = 6e-5;
  double lr_d = 2e-4;
  double lr_e = 2e-4;
};

const StageSpec& stage_config(std::int64_t iteration, const std::vector<StageSpec>& stages);

/// Which parameter groups one iteration may touch. Pure function of
/// (parity, warm-up state, ablation flags); the trainer consumes exactly
/// this decision, and the routing-table test enumerates it.
struct RoutingDecision {
  bool update_d = false;
  bool update_e_inversion = false;
  bool update_g_gan = false;
  bool run_odd = false;       // reconstruction/conditional objective runs
  bool update_g_odd = false;
  bool update_e_odd = false;
  bool include_cond = false;  // conditional term inside the odd objective
  bool fakes_from_encoder = false;  // D trains on encoder-conditioned fakes
};

RoutingDecision route_step(bool odd_iteration, bool warmup, const AblationFlags& flags);

}  // namespace nerfgan
