// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace nerfgan {

namespace {

struct KeyHandler {
  std::function<void(TrainingConfig&, const std::string&)> set;
  std::function<std::string(const TrainingConfig&)> get;
};

std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const std::int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t pos = 0;
    const double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("");
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': expected number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + v + "'");
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

// One handler per documented key; the same table drives parsing and the
// round-trip serializer, so they cannot drift apart.
const std::map<std::string, KeyHandler>& key_table() {
  static const std::map<std::string, KeyHandler> table = [] {
    std::map<std::string, KeyHandler> t;
    auto add_int = [&](const std::string& k, auto member) {
      t[k] = {[k, member](TrainingConfig& c, const std::string& v) {
                c.*member = static_cast<std::remove_reference_t<decltype(c.*member)>>(to_int(k, v));
              },
              [member](const TrainingConfig& c) { return std::to_string(c.*member); }};
    };
    auto add_double = [&](const std::string& k, auto member) {
      t[k] = {[k, member](TrainingConfig& c, const std::string& v) { c.*member = to_double(k, v); },
              [member](const TrainingConfig& c) { return fmt(c.*member); }};
    };
    auto add_bool = [&](const std::string& k, auto member) {
      t[k] = {[k, member](TrainingConfig& c, const std::string& v) { c.*member = to_bool(k, v); },
              [member](const TrainingConfig& c) { return c.*member ? "true" : "false"; }};
    };

    add_int("total_iterations", &TrainingConfig::total_iterations);
    add_int("batch_size", &TrainingConfig::batch_size);
    t["seed"] = {[](TrainingConfig& c, const std::string& v) {
                   c.seed = static_cast<std::uint64_t>(to_int("seed", v));
                 },
                 [](const TrainingConfig& c) { return std::to_string(c.seed); }};
    add_bool("deterministic", &TrainingConfig::deterministic);

    t["z_dim"] = {[](TrainingConfig& c, const std::string& v) {
                    c.generator.z_dim = static_cast<int>(to_int("z_dim", v));
                  },
                  [](const TrainingConfig& c) { return std::to_string(c.generator.z_dim); }};
    t["mapping_layers"] = {[](TrainingConfig& c, const std::string& v) {
                             c.generator.mapping_layers = static_cast<int>(to_int("mapping_layers", v));
                           },
                           [](const TrainingConfig& c) {
                             return std::to_string(c.generator.mapping_layers);
                           }};
    t["mapping_width"] = {[](TrainingConfig& c, const std::string& v) {
                            c.generator.mapping_width = static_cast<int>(to_int("mapping_width", v));
                          },
                          [](const TrainingConfig& c) {
                            return std::to_string(c.generator.mapping_width);
                          }};
    t["field_layers"] = {[](TrainingConfig& c, const std::string& v) {
                           c.generator.field_layers = static_cast<int>(to_int("field_layers", v));
                         },
                         [](const TrainingConfig& c) {
                           return std::to_string(c.generator.field_layers);
                         }};
    t["field_width"] = {[](TrainingConfig& c, const std::string& v) {
                          c.generator.field_width = static_cast<int>(to_int("field_width", v));
                        },
                        [](const TrainingConfig& c) {
                          return std::to_string(c.generator.field_width);
                        }};
    t["omega0"] = {[](TrainingConfig& c, const std::string& v) {
                     c.generator.omega0 = to_double("omega0", v);
                   },
                   [](const TrainingConfig& c) { return fmt(c.generator.omega0); }};

    t["conv_channels"] = {
        [](TrainingConfig& c, const std::string& v) {
          std::vector<int> channels;
          std::stringstream ss(v);
          std::string part;
          while (std::getline(ss, part, ','))
            channels.push_back(static_cast<int>(to_int("conv_channels", part)));
          if (channels.empty()) throw ConfigError("config key 'conv_channels': empty list");
          c.conv_channels = channels;
        },
        [](const TrainingConfig& c) {
          std::string out;
          for (std::size_t i = 0; i < c.conv_channels.size(); ++i) {
            if (i) out += ",";
            out += std::to_string(c.conv_channels[i]);
          }
          return out;
        }};
    add_int("base_resolution", &TrainingConfig::base_resolution);

    auto stage_field = [&](const std::string& key, int stage, auto setter, auto getter) {
      t[key] = {[key, stage, setter](TrainingConfig& c, const std::string& v) {
                  while (static_cast<int>(c.stages.size()) <= stage) {
                    StageSpec s = c.stages.back();
                    c.stages.push_back(s);
                  }
                  setter(c.stages[static_cast<std::size_t>(stage)], key, v);
                },
                [stage, getter](const TrainingConfig& c) -> std::string {
                  if (static_cast<int>(c.stages.size()) <= stage) return "";
                  return getter(c.stages[static_cast<std::size_t>(stage)]);
                }};
    };
    for (int stage = 0; stage < 2; ++stage) {
      const std::string p = "stage" + std::to_string(stage) + "_";
      stage_field(p + "resolution", stage,
                  [](StageSpec& s, const std::string& k, const std::string& v) {
                    s.resolution = static_cast<int>(to_int(k, v));
                  },
                  [](const StageSpec& s) { return std::to_string(s.resolution); });
      stage_field(p + "samples_per_ray", stage,
                  [](StageSpec& s, const std::string& k, const std::string& v) {
                    s.samples_per_ray = static_cast<int>(to_int(k, v));
                  },
                  [](const StageSpec& s) { return std::to_string(s.samples_per_ray); });
      stage_field(p + "lr_g", stage,
                  [](StageSpec& s, const std::string& k, const std::string& v) { s.lr_g = to_double(k, v); },
                  [](const StageSpec& s) { return fmt(s.lr_g); });
      stage_field(p + "lr_d", stage,
                  [](StageSpec& s, const std::string& k, const std::string& v) { s.lr_d = to_double(k, v); },
                  [](const StageSpec& s) { return fmt(s.lr_d); });
      stage_field(p + "lr_e", stage,
                  [](StageSpec& s, const std::string& k, const std::string& v) { s.lr_e = to_double(k, v); },
                  [](const StageSpec& s) { return fmt(s.lr_e); });
      if (stage > 0)
        stage_field(p + "switch_iteration", stage,
                    [](StageSpec& s, const std::string& k, const std::string& v) {
                      s.start_iteration = to_int(k, v);
                    },
                    [](const StageSpec& s) { return std::to_string(s.start_iteration); });
    }

    t["lambda_pos"] = {[](TrainingConfig& c, const std::string& v) {
                         c.weights.lambda_pos = to_double("lambda_pos", v);
                       },
                       [](const TrainingConfig& c) { return fmt(c.weights.lambda_pos); }};
    t["lambda_ssim"] = {[](TrainingConfig& c, const std::string& v) {
                          c.weights.lambda_ssim = to_double("lambda_ssim", v);
                        },
                        [](const TrainingConfig& c) { return fmt(c.weights.lambda_ssim); }};
    t["lambda_vgg"] = {[](TrainingConfig& c, const std::string& v) {
                         c.weights.lambda_vgg = to_double("lambda_vgg", v);
                       },
                       [](const TrainingConfig& c) { return fmt(c.weights.lambda_vgg); }};
    t["lambda_recon"] = {[](TrainingConfig& c, const std::string& v) {
                           c.weights.lambda_recon = to_double("lambda_recon", v);
                         },
                         [](const TrainingConfig& c) { return fmt(c.weights.lambda_recon); }};
    add_bool("pose_wraparound", &TrainingConfig::pose_wraparound);
    add_double("r1_gamma", &TrainingConfig::r1_gamma);

    t["prior_kind"] = {[](TrainingConfig& c, const std::string& v) {
                         if (v == "gaussian") c.prior.kind = PriorKind::kGaussian;
                         else if (v == "uniform_hemisphere") c.prior.kind = PriorKind::kUniformHemisphere;
                         else throw ConfigError("config key 'prior_kind': expected gaussian or uniform_hemisphere");
                       },
                       [](const TrainingConfig& c) {
                         return c.prior.kind == PriorKind::kGaussian ? "gaussian"
                                                                     : "uniform_hemisphere";
                       }};
    t["prior_pitch_mean"] = {[](TrainingConfig& c, const std::string& v) {
                               c.prior.mean.pitch = to_double("prior_pitch_mean", v);
                             },
                             [](const TrainingConfig& c) { return fmt(c.prior.mean.pitch); }};
    t["prior_yaw_mean"] = {[](TrainingConfig& c, const std::string& v) {
                             c.prior.mean.yaw = to_double("prior_yaw_mean", v);
                           },
                           [](const TrainingConfig& c) { return fmt(c.prior.mean.yaw); }};
    t["prior_pitch_std"] = {[](TrainingConfig& c, const std::string& v) {
                              c.prior.pitch_stddev = to_double("prior_pitch_std", v);
                            },
                            [](const TrainingConfig& c) { return fmt(c.prior.pitch_stddev); }};
    t["prior_yaw_std"] = {[](TrainingConfig& c, const std::string& v) {
                            c.prior.yaw_stddev = to_double("prior_yaw_std", v);
                          },
                          [](const TrainingConfig& c) { return fmt(c.prior.yaw_stddev); }};

    add_double("camera_radius", &TrainingConfig::camera_radius);
    add_double("camera_fov", &TrainingConfig::camera_fov);
    add_double("near", &TrainingConfig::near_plane);
    add_double("far", &TrainingConfig::far_plane);

    add_double("adam_beta1", &TrainingConfig::adam_beta1);
    add_double("adam_beta2", &TrainingConfig::adam_beta2);
    add_double("adam_eps", &TrainingConfig::adam_eps);
    t["perceptual_seed"] = {[](TrainingConfig& c, const std::string& v) {
                              c.perceptual_seed = static_cast<std::uint64_t>(to_int("perceptual_seed", v));
                            },
                            [](const TrainingConfig& c) { return std::to_string(c.perceptual_seed); }};
    return t;
  }();
  return table;
}

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

void apply_line(TrainingConfig& cfg, const std::string& line, const std::string& where) {
  const auto eq = line.find('=');
  if (eq == std::string::npos)
    throw ConfigError("config " + where + ": expected key=value, got '" + line + "'");
  const std::string key = trim(line.substr(0, eq));
  const std::string value = trim(line.substr(eq + 1));
  const auto& table = key_table();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("config " + where + ": unknown key '" + key + "'");
  it->second.set(cfg, value);
}

}  // namespace

void TrainingConfig::validate() const {
  if (total_iterations < 1) throw ConfigError("config: total_iterations must be >= 1");
  if (batch_size < 1) throw ConfigError("config: batch_size must be >= 1");
  if (generator.z_dim < 1) throw ConfigError("config: z_dim must be >= 1");
  if (generator.mapping_layers < 1 || generator.field_layers < 1)
    throw ConfigError("config: network depth must be >= 1");
  if (!(near_plane < far_plane))
    throw ConfigError("config: constraint violated: near (" + std::to_string(near_plane) +
                      ") must be < far (" + std::to_string(far_plane) + ")");
  if (!(camera_radius > 0)) throw ConfigError("config: camera_radius must be positive");
  if (!(camera_fov > 0 && camera_fov < kPi)) throw ConfigError("config: camera_fov out of (0, pi)");
  if (stages.empty()) throw ConfigError("config: at least one stage required");
  if (stages.front().start_iteration != 0)
    throw ConfigError("config: stage0 must start at iteration 0");
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto& s = stages[i];
    if (!(s.lr_g > 0 && s.lr_d > 0 && s.lr_e > 0))
      throw ConfigError("config: stage" + std::to_string(i) + " learning rates must be > 0");
    if (s.samples_per_ray < 1)
      throw ConfigError("config: stage" + std::to_string(i) + "_samples_per_ray must be >= 1");
    if (s.resolution < 1)
      throw ConfigError("config: stage" + std::to_string(i) + "_resolution must be >= 1");
    if (i > 0 && s.start_iteration <= stages[i - 1].start_iteration)
      throw ConfigError("config: stage switch iterations must increase");
    if (i > 0 && s.start_iteration >= total_iterations)
      throw ConfigError("config: stage" + std::to_string(i) +
                        "_switch_iteration must be < total_iterations");
  }
  if (!(adam_beta1 >= 0 && adam_beta1 < 1) || !(adam_beta2 >= 0 && adam_beta2 < 1))
    throw ConfigError("config: adam betas must be in [0, 1)");
  if (!(adam_eps > 0)) throw ConfigError("config: adam_eps must be > 0");
  weights.validate();
  prior.validate();
  conv_arch().validate();
}

TrainingConfig parse_config_text(const std::string& text, const std::vector<std::string>& overrides) {
  TrainingConfig cfg;
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    apply_line(cfg, line, "line " + std::to_string(lineno));
  }
  for (const auto& o : overrides) apply_line(cfg, o, "override");
  cfg.validate();
  return cfg;
}

TrainingConfig parse_config(const std::string& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str(), overrides);
}

TrainingConfig ablation_config(char tag, TrainingConfig base) {
  base.ablation = ablation_flags_from_tag(tag);
  if (base.ablation.lambda_recon_override)
    base.weights.lambda_recon = base.ablation.lambda_recon_value;
  return base;
}

std::string config_to_text(const TrainingConfig& cfg) {
  std::string out;
  for (const auto& [key, handler] : key_table()) {
    const std::string v = handler.get(cfg);
    if (!v.empty()) out += key + " = " + v + "\n";
  }
  if (cfg.ablation.any()) out += std::string("# ablation tag: ") + cfg.ablation.tag + "\n";
  return out;
}

}  // namespace nerfgan
