#include "optit/cli/manifest.hpp"

#include <fstream>

#include <json.hpp>

namespace optit::cli {

void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    std::uint64_t seed, double wall_seconds, std::int64_t env_steps,
                    std::int64_t episodes, std::int64_t updates,
                    const std::vector<std::string>& outputs) {
  nlohmann::json j;
  j["build"] = kBuildVersion;
  j["seed"] = seed;
  j["config"] = serialize_config(cfg);
  j["wall_seconds"] = wall_seconds;
  j["totals"] = {{"env_steps", env_steps}, {"episodes", episodes}, {"updates", updates}};
  j["outputs"] = outputs;
  std::ofstream os(path);
  require(os.good(), "write_manifest: cannot open " + path);
  os << j.dump(2) << "\n";
}

}  // namespace optit::cli
