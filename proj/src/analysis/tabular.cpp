#include "optit/analysis/tabular.hpp"

#include <cmath>

namespace optit::analysis {

MazeInstance sample_instance(int width, double penalty, Rng& rng) {
  MazeInstance inst;
  inst.maze = env::generate_maze(width, rng);
  std::vector<int> open;
  for (int c = 0; c < inst.maze.cells(); ++c) {
    if (!inst.maze.is_wall(c)) open.push_back(c);
  }
  inst.goal = open[rng.below(static_cast<std::uint32_t>(open.size()))];
  inst.penalty = penalty;
  return inst;
}

int next_cell(const MazeInstance& inst, int cell, int action) {
  int w = inst.maze.width;
  int x = cell % w + env::kDx[action];
  int y = cell / w + env::kDy[action];
  if (x < 0 || x >= w || y < 0 || y >= w) return cell;
  return y * w + x;
}

double step_reward(const MazeInstance& inst, int cell, int action) {
  int nc = next_cell(inst, cell, action);
  if (nc != cell && inst.maze.is_wall(nc)) return -inst.penalty;
  return -1.0;
}

namespace {

double bellman_residual_q(const MazeInstance& inst, const TabularQ& q, double gamma,
                          bool greedy) {
  int cells = inst.maze.cells();
  double worst = 0;
  for (int c = 0; c < cells; ++c) {
    if (c == inst.goal) continue;
    for (int a = 0; a < 4; ++a) {
      int nc = next_cell(inst, c, a);
      double backup = step_reward(inst, c, a);
      if (nc != inst.goal) {
        if (greedy) {
          double best = q.at(nc, 0);
          for (int b = 1; b < 4; ++b) best = std::max(best, q.at(nc, b));
          backup += gamma * best;
        } else {
          double mean = 0;
          for (int b = 0; b < 4; ++b) mean += q.at(nc, b);
          backup += gamma * mean / 4.0;
        }
      }
      worst = std::max(worst, std::fabs(q.at(c, a) - backup));
    }
  }
  return worst;
}

}  // namespace

TabularQ solve_random_policy_q(const MazeInstance& inst, double gamma) {
  const int cells = inst.maze.cells();
  // Dense solve for V_pi over non-goal cells: V = mean_a [r + gamma V(next)].
  std::vector<int> index(cells, -1);
  std::vector<int> states;
  for (int c = 0; c < cells; ++c) {
    if (c == inst.goal) continue;
    index[c] = static_cast<int>(states.size());
    states.push_back(c);
  }
  const int n = static_cast<int>(states.size());
  std::vector<double> m(static_cast<std::size_t>(n) * (n + 1), 0.0);
  auto at = [&](int r, int col) -> double& { return m[static_cast<std::size_t>(r) * (n + 1) + col]; };

  for (int r = 0; r < n; ++r) {
    int c = states[r];
    at(r, r) += 1.0;
    double rhs = 0;
    for (int a = 0; a < 4; ++a) {
      rhs += 0.25 * step_reward(inst, c, a);
      int nc = next_cell(inst, c, a);
      if (nc != inst.goal) at(r, index[nc]) -= 0.25 * gamma;
    }
    at(r, n) = rhs;
  }

  // Gaussian elimination with partial pivoting.
  for (int col = 0; col < n; ++col) {
    int pivot = col;
    for (int r = col + 1; r < n; ++r) {
      if (std::fabs(at(r, col)) > std::fabs(at(pivot, col))) pivot = r;
    }
    require(std::fabs(at(pivot, col)) > 1e-12, "solve_random_policy_q: singular system");
    if (pivot != col) {
      for (int k = col; k <= n; ++k) std::swap(at(pivot, k), at(col, k));
    }
    double inv = 1.0 / at(col, col);
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      double f = at(r, col) * inv;
      if (f == 0) continue;
      for (int k = col; k <= n; ++k) at(r, k) -= f * at(col, k);
    }
  }
  std::vector<double> v(cells, 0.0);
  for (int r = 0; r < n; ++r) v[states[r]] = at(r, n) / at(r, r);

  TabularQ q;
  q.width = inst.maze.width;
  q.q.assign(static_cast<std::size_t>(cells) * 4, 0.0);
  for (int c = 0; c < cells; ++c) {
    if (c == inst.goal) continue;
    for (int a = 0; a < 4; ++a) {
      int nc = next_cell(inst, c, a);
      q.q[static_cast<std::size_t>(c) * 4 + a] =
          step_reward(inst, c, a) + (nc == inst.goal ? 0.0 : gamma * v[nc]);
    }
  }
  q.bellman_residual = bellman_residual_q(inst, q, gamma, /*greedy=*/false);
  return q;
}

TabularQ value_iteration_q(const MazeInstance& inst, double gamma, double tol,
                           int max_iters) {
  const int cells = inst.maze.cells();
  std::vector<double> v(cells, 0.0), v2(cells, 0.0);
  double delta = 0;
  int it = 0;
  for (; it < max_iters; ++it) {
    delta = 0;
    for (int c = 0; c < cells; ++c) {
      if (c == inst.goal) continue;
      double best = -std::numeric_limits<double>::infinity();
      for (int a = 0; a < 4; ++a) {
        int nc = next_cell(inst, c, a);
        double val = step_reward(inst, c, a) + (nc == inst.goal ? 0.0 : gamma * v[nc]);
        best = std::max(best, val);
      }
      v2[c] = best;
      delta = std::max(delta, std::fabs(v2[c] - v[c]));
    }
    v.swap(v2);
    if (delta < tol) break;
  }
  require(delta < tol, "value_iteration_q: did not converge");

  TabularQ q;
  q.width = inst.maze.width;
  q.q.assign(static_cast<std::size_t>(cells) * 4, 0.0);
  for (int c = 0; c < cells; ++c) {
    if (c == inst.goal) continue;
    for (int a = 0; a < 4; ++a) {
      int nc = next_cell(inst, c, a);
      q.q[static_cast<std::size_t>(c) * 4 + a] =
          step_reward(inst, c, a) + (nc == inst.goal ? 0.0 : gamma * v[nc]);
    }
  }
  q.bellman_residual = bellman_residual_q(inst, q, gamma, /*greedy=*/true);
  return q;
}

bool greedy_enters_wall(const MazeInstance& inst, const TabularQ& q) {
  for (int c = 0; c < inst.maze.cells(); ++c) {
    if (c == inst.goal || inst.maze.is_wall(c)) continue;
    int best = 0;
    for (int a = 1; a < 4; ++a) {
      if (q.at(c, a) > q.at(c, best)) best = a;
    }
    int nc = next_cell(inst, c, best);
    if (nc != c && inst.maze.is_wall(nc)) return true;
  }
  return false;
}

bool optimal_avoids_walls(const MazeInstance& inst, const TabularQ& qstar, double tol) {
  for (int c = 0; c < inst.maze.cells(); ++c) {
    if (c == inst.goal || inst.maze.is_wall(c)) continue;
    double best = qstar.at(c, 0);
    for (int a = 1; a < 4; ++a) best = std::max(best, qstar.at(c, a));
    bool ok = false;
    for (int a = 0; a < 4; ++a) {
      int nc = next_cell(inst, c, a);
      bool into_wall = nc != c && inst.maze.is_wall(nc);
      if (!into_wall && qstar.at(c, a) >= best - tol) ok = true;
    }
    if (!ok) return false;
  }
  return true;
}

}  // namespace optit::analysis
