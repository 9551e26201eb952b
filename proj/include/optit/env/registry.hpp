#pragma once
#include <memory>
#include <string>

#include "optit/env/compass.hpp"
#include "optit/env/hierarchical.hpp"
#include "optit/env/procmaze.hpp"

namespace optit::env {

enum class EnvKind { compass, procmaze, electric_procmaze, hier_electric_procmaze };

EnvKind env_kind_from_string(const std::string& s);
std::string to_string(EnvKind kind);

struct EnvConfig {
  EnvKind kind = EnvKind::compass;
  int width = 15;
  int timeout = 20;
  int controller_width = 8;
  double wall_penalty = 0;  // 0 = use the shipped frozen value for this width
  double discount = 0.99;

  bool operator==(const EnvConfig&) const = default;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& cfg);

}  // namespace optit::env
