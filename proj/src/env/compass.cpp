#include "optit/env/compass.hpp"

namespace optit::env {

CompassEnv::CompassEnv(int width, double discount) : width_(width) {
  require(width >= 3, "CompassEnv: width must be >= 3");
  spec_.num_actions = 4;
  spec_.observation_dim = 2 * width;
  spec_.discount = discount;
}

EnvState CompassEnv::make_state(int x, int y, int reward_edge) {
  EnvState s;
  s.w = {x, y, reward_edge};
  return s;
}

int CompassEnv::edge_of(int x, int y) const {
  if (y == 0) return 0;
  if (y == width_ - 1) return 1;
  if (x == 0) return 2;
  if (x == width_ - 1) return 3;
  return -1;
}

EnvState CompassEnv::reset(Rng& rng) const {
  // Uniform over interior cells; the rewarding edge is resampled per episode.
  int x = 1 + static_cast<int>(rng.below(width_ - 2));
  int y = 1 + static_cast<int>(rng.below(width_ - 2));
  int edge = static_cast<int>(rng.below(4));
  return make_state(x, y, edge);
}

Transition CompassEnv::step(const EnvState& s, int action, Rng&) const {
  check_step_args(s, action);
  int x = x_of(s) + kDx[action];
  int y = y_of(s) + kDy[action];
  Transition tr;
  tr.next = make_state(x, y, reward_edge_of(s));
  int edge = edge_of(x, y);
  if (edge >= 0) {
    tr.reward = edge == reward_edge_of(s) ? 1.0 : -1.0;
    tr.terminal = true;
    tr.next.terminal = true;
  } else {
    tr.reward = 0.0;
    tr.terminal = false;
  }
  return tr;
}

void CompassEnv::encode(const EnvState& s, float* out) const {
  for (int i = 0; i < 2 * width_; ++i) out[i] = 0.0f;
  out[x_of(s)] = 1.0f;
  out[width_ + y_of(s)] = 1.0f;
}

}  // namespace optit::env
