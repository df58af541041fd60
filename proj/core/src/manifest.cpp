// SPDX-License-Identifier: Apache-2.0
#include "nerfgan/manifest.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace nerfgan {

std::string current_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string artifact_version() { return "0.1.0"; }

namespace {
std::string json_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 8);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\t': out += "\\t"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}
}  // namespace

void write_run_manifest(const RunManifest& m, const std::string& run_dir) {
  std::filesystem::create_directories(run_dir);
  std::ofstream out(std::filesystem::path(run_dir) / "manifest.json");
  if (!out) throw std::runtime_error("cannot write run manifest in " + run_dir);
  out << "{\n";
  out << "  \"command\": \"" << json_escape(m.command) << "\",\n";
  out << "  \"version\": \"" << json_escape(m.version) << "\",\n";
  out << "  \"seed\": " << m.seed << ",\n";
  if (m.ablation_tag)
    out << "  \"ablation\": \"" << m.ablation_tag << "\",\n";
  out << "  \"started_at\": \"" << json_escape(m.started_at) << "\",\n";
  out << "  \"finished_at\": \"" << json_escape(m.finished_at) << "\",\n";
  out << "  \"argv\": [";
  for (std::size_t i = 0; i < m.argv.size(); ++i)
    out << (i ? ", " : "") << "\"" << json_escape(m.argv[i]) << "\"";
  out << "],\n";
  out << "  \"outputs\": [";
  for (std::size_t i = 0; i < m.outputs.size(); ++i)
    out << (i ? ", " : "") << "\"" << json_escape(m.outputs[i]) << "\"";
  out << "],\n";
  out << "  \"config\": \"" << json_escape(m.config_text) << "\"\n";
  out << "}\n";
}

}  // namespace nerfgan
