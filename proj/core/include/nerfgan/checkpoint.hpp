// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "nerfgan/adam.hpp"
#include "nerfgan/config.hpp"
#include "nerfgan/params.hpp"
#include "nerfgan/rng.hpp"

namespace nerfgan {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format is little-endian; big-endian hosts are unsupported");

struct CheckpointError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Complete optimization state: parameters of G/D/E, per-objective Adam
/// moments, the iteration counter, and the RNG cursor.
template <class Real>
struct TrainState {
  std::int64_t iteration = 0;
  ParameterStore<Real> params;
  AdamState<Real> adam_d_gan, adam_e_inv, adam_g_gan, adam_g_odd, adam_e_odd;
  RngStream rng;
};

namespace detail {

template <class Real>
void write_array(const std::filesystem::path& path, const Tensor<Real>& t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw CheckpointError("checkpoint: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(t.data.data()),
            static_cast<std::streamsize>(t.numel() * sizeof(Real)));
  if (!out) throw CheckpointError("checkpoint: short write to " + path.string());
}

template <class Real>
void read_array(const std::filesystem::path& path, Tensor<Real>& t) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw CheckpointError("checkpoint: cannot read " + path.string());
  const auto bytes = static_cast<std::int64_t>(in.tellg());
  if (bytes != t.numel() * static_cast<std::int64_t>(sizeof(Real)))
    throw CheckpointError("checkpoint: " + path.string() + " has " + std::to_string(bytes) +
                          " bytes, expected " + std::to_string(t.numel() * sizeof(Real)));
  in.seekg(0);
  in.read(reinterpret_cast<char*>(t.data.data()), bytes);
  if (!in) throw CheckpointError("checkpoint: short read from " + path.string());
}

inline std::string shape_to_string(const std::vector<int>& shape) {
  std::string out;
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out;
}

inline std::vector<int> shape_from_string(const std::string& s) {
  std::vector<int> shape;
  std::size_t pos = 0;
  while (pos < s.size()) {
    const auto next = s.find('x', pos);
    const std::string part = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
    shape.push_back(std::stoi(part));
    if (next == std::string::npos) break;
    pos = next + 1;
  }
  return shape;
}

}  // namespace detail

/// A checkpoint is a directory: `manifest.txt` with the format version,
/// dtype, architecture, priors, camera model, iteration, seed material and
/// the tensor directory; plus one raw little-endian array file per named
/// parameter or optimizer-moment tensor.
template <class Real>
void save_checkpoint(const std::filesystem::path& dir, const TrainState<Real>& state,
                     const TrainingConfig& cfg) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::map<std::string, const Tensor<Real>*> tensors;
  for (const auto& [name, t] : state.params.all()) tensors.emplace(name, &t);
  auto add_adam = [&](const char* group, const AdamState<Real>& a) {
    for (const auto& [name, t] : a.m()) tensors.emplace("adam." + std::string(group) + ".m." + name, &t);
    for (const auto& [name, t] : a.v()) tensors.emplace("adam." + std::string(group) + ".v." + name, &t);
  };
  add_adam("d_gan", state.adam_d_gan);
  add_adam("e_inv", state.adam_e_inv);
  add_adam("g_gan", state.adam_g_gan);
  add_adam("g_odd", state.adam_g_odd);
  add_adam("e_odd", state.adam_e_odd);

  std::ofstream man(dir / "manifest.txt");
  if (!man) throw CheckpointError("checkpoint: cannot write manifest in " + dir.string());
  man << "format_version=1\n";
  man << "dtype=" << (sizeof(Real) == 4 ? "f32" : "f64") << "\n";
  man << "iteration=" << state.iteration << "\n";
  man << "seed=" << cfg.seed << "\n";
  man << "rng_state=" << state.rng.serialize() << "\n";
  man << "z_dim=" << cfg.generator.z_dim << "\n";
  man << "mapping_layers=" << cfg.generator.mapping_layers << "\n";
  man << "mapping_width=" << cfg.generator.mapping_width << "\n";
  man << "field_layers=" << cfg.generator.field_layers << "\n";
  man << "field_width=" << cfg.generator.field_width << "\n";
  man << "omega0=" << cfg.generator.omega0 << "\n";
  man << "conv_channels=";
  for (std::size_t i = 0; i < cfg.conv_channels.size(); ++i)
    man << (i ? "," : "") << cfg.conv_channels[i];
  man << "\n";
  man << "base_resolution=" << cfg.base_resolution << "\n";
  man << "prior_kind=" << (cfg.prior.kind == PriorKind::kGaussian ? "gaussian" : "uniform_hemisphere")
      << "\n";
  man << "prior_pitch_mean=" << cfg.prior.mean.pitch << "\n";
  man << "prior_yaw_mean=" << cfg.prior.mean.yaw << "\n";
  man << "prior_pitch_std=" << cfg.prior.pitch_stddev << "\n";
  man << "prior_yaw_std=" << cfg.prior.yaw_stddev << "\n";
  man << "camera_radius=" << cfg.camera_radius << "\n";
  man << "camera_fov=" << cfg.camera_fov << "\n";
  man << "near=" << cfg.near_plane << "\n";
  man << "far=" << cfg.far_plane << "\n";
  man << "perceptual_seed=" << cfg.perceptual_seed << "\n";
  man << "perceptual_tag=randconv3/seed=" << cfg.perceptual_seed << "\n";
  man << "adam_steps=" << state.adam_d_gan.steps() << "," << state.adam_e_inv.steps() << ","
      << state.adam_g_gan.steps() << "," << state.adam_g_odd.steps() << ","
      << state.adam_e_odd.steps() << "\n";
  for (const auto& [name, t] : tensors)
    man << "tensor=" << name << ":" << detail::shape_to_string(t->shape) << "\n";
  man.close();

  for (const auto& [name, t] : tensors) detail::write_array(dir / (name + ".bin"), *t);
}

struct CheckpointManifest {
  std::map<std::string, std::string> fields;
  std::vector<std::pair<std::string, std::vector<int>>> tensors;

  const std::string& field(const std::string& key) const {
    auto it = fields.find(key);
    if (it == fields.end()) throw CheckpointError("checkpoint manifest: missing field '" + key + "'");
    return it->second;
  }
  std::int64_t field_int(const std::string& key) const { return std::stoll(field(key)); }
  double field_double(const std::string& key) const { return std::stod(field(key)); }
};

inline CheckpointManifest read_manifest(const std::filesystem::path& dir) {
  std::ifstream man(dir / "manifest.txt");
  if (!man) throw CheckpointError("checkpoint: cannot read manifest in " + dir.string());
  CheckpointManifest out;
  std::string line;
  while (std::getline(man, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw CheckpointError("checkpoint manifest: bad line '" + line + "'");
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "tensor") {
      const auto colon = value.rfind(':');
      if (colon == std::string::npos)
        throw CheckpointError("checkpoint manifest: bad tensor entry '" + value + "'");
      out.tensors.emplace_back(value.substr(0, colon),
                               detail::shape_from_string(value.substr(colon + 1)));
    } else {
      out.fields[key] = value;
    }
  }
  return out;
}

/// Reconstruct the architecture-bearing parts of a TrainingConfig from a
/// manifest (inference needs no more than this).
TrainingConfig config_from_manifest(const CheckpointManifest& man);

template <class Real>
TrainState<Real> load_checkpoint(const std::filesystem::path& dir, const TrainingConfig& expected) {
  const CheckpointManifest man = read_manifest(dir);
  if (man.field("format_version") != "1")
    throw CheckpointError("checkpoint: unsupported format version " + man.field("format_version"));
  const std::string want_dtype = sizeof(Real) == 4 ? "f32" : "f64";
  if (man.field("dtype") != want_dtype)
    throw CheckpointError("checkpoint: dtype is " + man.field("dtype") + ", expected " + want_dtype);

  auto check_int = [&](const std::string& key, std::int64_t expected_value) {
    if (man.field_int(key) != expected_value)
      throw CheckpointError("checkpoint: manifest " + key + "=" + man.field(key) +
                            " does not match expected " + std::to_string(expected_value));
  };
  check_int("z_dim", expected.generator.z_dim);
  check_int("mapping_layers", expected.generator.mapping_layers);
  check_int("mapping_width", expected.generator.mapping_width);
  check_int("field_layers", expected.generator.field_layers);
  check_int("field_width", expected.generator.field_width);
  check_int("base_resolution", expected.base_resolution);

  TrainState<Real> state;
  state.iteration = man.field_int("iteration");
  state.rng = RngStream::deserialize(man.field("rng_state"));
  {
    std::stringstream ss(man.field("adam_steps"));
    std::string part;
    AdamState<Real>* groups[5] = {&state.adam_d_gan, &state.adam_e_inv, &state.adam_g_gan,
                                  &state.adam_g_odd, &state.adam_e_odd};
    for (auto* g : groups) {
      if (!std::getline(ss, part, ','))
        throw CheckpointError("checkpoint: malformed adam_steps field");
      g->set_steps(std::stoll(part));
    }
  }

  for (const auto& [name, shape] : man.tensors) {
    Tensor<Real> t(shape);
    detail::read_array(dir / (name + ".bin"), t);
    if (name.rfind("adam.", 0) == 0) {
      const auto second = name.find('.', 5);
      const auto third = name.find('.', second + 1);
      const std::string group = name.substr(5, second - 5);
      const std::string kind = name.substr(second + 1, third - second - 1);
      const std::string param = name.substr(third + 1);
      AdamState<Real>* a = nullptr;
      if (group == "d_gan") a = &state.adam_d_gan;
      else if (group == "e_inv") a = &state.adam_e_inv;
      else if (group == "g_gan") a = &state.adam_g_gan;
      else if (group == "g_odd") a = &state.adam_g_odd;
      else if (group == "e_odd") a = &state.adam_e_odd;
      else throw CheckpointError("checkpoint: unknown optimizer group in " + name);
      (kind == "m" ? a->m() : a->v())[param] = std::move(t);
    } else {
      state.params.add(name, shape) = std::move(t);
    }
  }
  return state;
}

}  // namespace nerfgan
