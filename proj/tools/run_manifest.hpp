#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace dhmpc::tools {

/// Provenance record written once per output directory: the command, its
/// configuration snapshot, the seed, the build id and the produced files.
/// Reruns with identical inputs reproduce identical numeric outputs.
struct RunManifest {
  std::string command;
  std::vector<std::string> argv;
  nlohmann::json config;
  std::uint64_t seed = 0;
  double wall_time_s = 0;
  std::vector<std::string> outputs;

  /// Writes <dir>/manifest.json (overwriting any previous manifest).
  void write(const std::string& dir) const;
};

}  // namespace dhmpc::tools
