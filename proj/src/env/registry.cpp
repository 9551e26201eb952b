#include "optit/env/registry.hpp"

namespace optit::env {

EnvKind env_kind_from_string(const std::string& s) {
  if (s == "compass") return EnvKind::compass;
  if (s == "procmaze") return EnvKind::procmaze;
  if (s == "electric_procmaze") return EnvKind::electric_procmaze;
  if (s == "hier_electric_procmaze") return EnvKind::hier_electric_procmaze;
  throw std::invalid_argument("unknown env kind: " + s);
}

std::string to_string(EnvKind kind) {
  switch (kind) {
    case EnvKind::compass: return "compass";
    case EnvKind::procmaze: return "procmaze";
    case EnvKind::electric_procmaze: return "electric_procmaze";
    case EnvKind::hier_electric_procmaze: return "hier_electric_procmaze";
  }
  return "?";
}

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg) {
  double penalty = cfg.wall_penalty;
  switch (cfg.kind) {
    case EnvKind::compass:
      return std::make_unique<CompassEnv>(cfg.width, cfg.discount);
    case EnvKind::procmaze:
      return std::make_unique<ProcMazeEnv>(cfg.width, false, 1.0, cfg.discount);
    case EnvKind::electric_procmaze:
      if (penalty <= 0) penalty = shipped_wall_penalty(cfg.width);
      return std::make_unique<ProcMazeEnv>(cfg.width, true, penalty, cfg.discount);
    case EnvKind::hier_electric_procmaze:
      if (penalty <= 0) penalty = shipped_wall_penalty(cfg.width);
      return std::make_unique<HierarchicalEnv>(cfg.width, penalty,
                                               cfg.controller_width, cfg.discount);
  }
  throw std::invalid_argument("make_environment: bad kind");
}

}  // namespace optit::env
