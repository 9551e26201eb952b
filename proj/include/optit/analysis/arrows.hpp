#pragma once
#include <string>
#include <vector>

#include "optit/env/compass.hpp"
#include "optit/env/hierarchical.hpp"
#include "optit/env/procmaze.hpp"
#include "optit/nn/model.hpp"

namespace optit::analysis {

// Per cell, the modal action of one policy head and its probability; action -1
// marks cells without an arrow (edges, walls in overlay-only roles, the goal).
struct CellArrow {
  int action = -1;
  double prob = 0;
};

struct OptionGrids {
  int width = 0, height = 0;
  std::vector<std::vector<CellArrow>> options;  // per option, width*height cells
  std::vector<CellArrow> rho;                   // modal option per cell (action = option id)
  std::vector<std::uint8_t> wall;               // overlay (empty if none)
  int goal = -1;
  std::vector<std::pair<int, int>> buttons;  // (cell, action id)
};

OptionGrids compass_option_grids(const nn::Model<float>& m, const env::CompassEnv& e);
OptionGrids epm_option_grids(const nn::Model<float>& m, const env::ProcMazeEnv& e,
                             const env::EnvState& context);
// Controller-grid arrows with the base state (and selection/countdown) frozen
// from `context`.
OptionGrids hier_option_grids(const nn::Model<float>& m, const env::HierarchicalEnv& e,
                              const env::EnvState& context);

// Arrow length is proportional to the modal action's probability; probability
// one reaches the cell edge.
void render_option_grids(const OptionGrids& grids, const std::string& path,
                         const std::string& manifest = "");

}  // namespace optit::analysis
