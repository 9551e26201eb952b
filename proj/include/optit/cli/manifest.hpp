#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "optit/cli/config.hpp"

namespace optit::cli {

inline constexpr const char* kBuildVersion = "optit 0.1.0";

// Run manifest: resolved config snapshot, build identifier, seed, wall-clock
// and totals, plus the output files that belong to it.
void write_manifest(const std::string& path, const ExperimentConfig& cfg,
                    std::uint64_t seed, double wall_seconds, std::int64_t env_steps,
                    std::int64_t episodes, std::int64_t updates,
                    const std::vector<std::string>& outputs);

}  // namespace optit::cli
