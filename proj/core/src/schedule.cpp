// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/schedule.hpp"

namespace nerfgan {

AblationFlags ablation_flags_from_tag(char tag) {
  AblationFlags f;
  f.tag = tag;
  switch (tag) {
    case 0:
      break;
    case 'A':
      f.freeze_generator = true;
      // The frozen-GAN study trains the encoder on every encoder objective;
      // warm-up would leave nothing to optimize on odd steps.
      f.no_warmup = true;
      break;
    case 'B':
      f.drop_latent_gan = true;
      f.no_inversion = true;
      break;
    case 'C':
      f.no_inversion = true;
      break;
    case 'D':
      f.no_cond_adversarial = true;
      break;
    case 'E':
      f.no_warmup = true;
      break;
    case 'F':
      f.always_warmup = true;
      break;
    case 'G':
    case 'H':
    case 'I':
    case 'J': {
      f.no_warmup = true;
      f.lambda_recon_override = true;
      const double values[4] = {1.0, 0.1, 0.01, 0.001};
      f.lambda_recon_value = values[tag - 'G'];
      break;
    }
    default:
      throw ConfigError(std::string("unknown ablation tag '") + tag + "' (expected A..J)");
  }
  return f;
}

bool warmup_active(std::int64_t iteration, std::int64_t total, const AblationFlags& flags) {
  if (flags.always_warmup) return true;
  if (flags.no_warmup) return false;
  return iteration < total / 2;
}

const StageSpec& stage_config(std::int64_t iteration, const std::vector<StageSpec>& stages) {
  if (stages.empty()) throw ConfigError("stage schedule is empty");
  const StageSpec* current = &stages.front();
  for (const auto& s : stages)
    if (s.start_iteration <= iteration) current = &s;
  return *current;
}

RoutingDecision route_step(bool odd_iteration, bool warmup, const AblationFlags& flags) {
  RoutingDecision r;
  r.update_d = !flags.freeze_generator;  // a frozen pretrained GAN keeps D frozen too
  r.update_e_inversion = !flags.no_inversion;
  r.update_g_gan = !odd_iteration && !flags.freeze_generator && !flags.drop_latent_gan;
  r.run_odd = odd_iteration;
  if (odd_iteration) {
    r.update_g_odd = !flags.freeze_generator;
    r.update_e_odd = !warmup;
    r.include_cond = !flags.no_cond_adversarial;
  }
  r.fakes_from_encoder = flags.drop_latent_gan;
  return r;
}

}  // namespace nerfgan
