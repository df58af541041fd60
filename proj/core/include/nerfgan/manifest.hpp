// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "nerfgan/config.hpp"

namespace nerfgan {

/// Record of one CLI run: the resolved configuration snapshot, seed,
/// version, timestamps, and produced artifacts. Exactly one per run
/// directory; re-running with the recorded config and seed reproduces the
/// run in deterministic mode.
struct RunManifest {
  std::string command;
  std::string config_text;  // resolved TrainingConfig, config-file syntax
  std::uint64_t seed = 0;
  char ablation_tag = 0;
  std::string version;
  std::string started_at;
  std::string finished_at;
  std::vector<std::string> outputs;
  std::vector<std::string> argv;
};

void write_run_manifest(const RunManifest& manifest, const std::string& run_dir);

std::string current_timestamp();
std::string artifact_version();

}  // namespace nerfgan
