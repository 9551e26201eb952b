#pragma once
#include <string>

#include "optit/nn/model.hpp"

namespace optit::nn {

// Versioned binary checkpoint: config header followed by the flat
// little-endian float32 parameter arrays in declaration order (policy net,
// then value net). `manifest` names the run manifest this file belongs to.
void save_checkpoint(const Model<float>& m, const std::string& manifest,
                     const std::string& path);

struct Checkpoint {
  Model<float> model;
  std::string manifest;
};

Checkpoint load_checkpoint(const std::string& path);

// Human-readable layer shapes and L2 norms.
std::string describe_checkpoint(const std::string& path);

}  // namespace optit::nn
