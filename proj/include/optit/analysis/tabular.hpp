#pragma once
#include "optit/env/procmaze.hpp"

namespace optit::analysis {

// A fixed ElectricProcMaze instance: maze layout, goal cell and wall penalty.
// The tabular state space is the agent cell (walls included, since the
// electric variant lets the agent stand inside walls).
struct MazeInstance {
  env::MazeLayout maze;
  int goal = 0;
  double penalty = 0;
};

MazeInstance sample_instance(int width, double penalty, Rng& rng);

struct TabularQ {
  int width = 0;
  std::vector<double> q;  // cells x 4
  double bellman_residual = 0;

  double at(int cell, int a) const { return q[static_cast<std::size_t>(cell) * 4 + a]; }
};

// Exact action values of the uniform-random policy via a dense linear solve
// (Gaussian elimination); residual is checked after solving.
TabularQ solve_random_policy_q(const MazeInstance& inst, double gamma = 1.0);

// Optimal action values via value iteration to sup-norm tolerance `tol`.
TabularQ value_iteration_q(const MazeInstance& inst, double gamma = 1.0,
                           double tol = 1e-12, int max_iters = 1000000);

// Deterministic next cell under the electric semantics (stay when leaving the
// grid); mirrors ProcMazeEnv::step.
int next_cell(const MazeInstance& inst, int cell, int action);
double step_reward(const MazeInstance& inst, int cell, int action);

// True when the greedy policy of `q` moves into a wall cell from at least one
// open non-goal cell.
bool greedy_enters_wall(const MazeInstance& inst, const TabularQ& q);

// True when from every open non-goal cell some optimal action (within tol of
// the max) moves to a non-wall cell.
bool optimal_avoids_walls(const MazeInstance& inst, const TabularQ& qstar,
                          double tol = 1e-9);

}  // namespace optit::analysis
