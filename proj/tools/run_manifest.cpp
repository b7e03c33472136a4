#include "run_manifest.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "dhmpc_version.hpp"

namespace dhmpc::tools {

void RunManifest::write(const std::string& dir) const {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  nlohmann::json j;
  j["command"] = command;
  j["argv"] = argv;
  j["config"] = config;
  j["seed"] = seed;
  j["git_describe"] = DHMPC_GIT_DESCRIBE;
  j["wall_time_s"] = wall_time_s;
  j["outputs"] = outputs;
  const fs::path path = fs::path(dir) / "manifest.json";
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace dhmpc::tools
