#include "optit/env/hierarchical.hpp"

namespace optit::env {

HierarchicalEnv::HierarchicalEnv(int base_width, double wall_penalty,
                                 int controller_width, double discount)
    : base_(base_width, /*electric=*/true, wall_penalty, discount),
      ctrl_width_(controller_width) {
  require(controller_width >= 3, "HierarchicalEnv: controller width must be >= 3");
  base_payload_ = 2 + base_width * base_width;
  spec_.num_actions = 4;
  spec_.observation_dim = base_.spec().observation_dim +
                          ctrl_width_ * ctrl_width_ + 5 + ctrl_width_;
  spec_.discount = discount;
}

int HierarchicalEnv::button_at(int cx, int cy) const {
  int mid = ctrl_width_ / 2;
  if (cx == mid && cy == 0) return kUp;
  if (cx == mid && cy == ctrl_width_ - 1) return kDown;
  if (cx == 0 && cy == mid) return kLeft;
  if (cx == ctrl_width_ - 1 && cy == mid) return kRight;
  return -1;
}

EnvState HierarchicalEnv::base_state_of(const EnvState& s) const {
  EnvState b;
  b.w.assign(s.w.begin(), s.w.begin() + base_payload_);
  b.terminal = s.terminal;
  return b;
}

EnvState HierarchicalEnv::make_state(const EnvState& base_state, int cx, int cy,
                                     int selected, int countdown) const {
  EnvState s;
  s.w = base_state.w;
  s.w.push_back(cx);
  s.w.push_back(cy);
  s.w.push_back(selected);
  s.w.push_back(countdown);
  s.terminal = base_state.terminal;
  return s;
}

EnvState HierarchicalEnv::reset(Rng& rng) const {
  EnvState base_state = base_.reset(rng);
  int mid = ctrl_width_ / 2;
  return make_state(base_state, mid, mid, kNoop, ctrl_width_);
}

Transition HierarchicalEnv::step(const EnvState& s, int action, Rng& rng) const {
  check_step_args(s, action);
  int cx = ctrl_x_of(s) + kDx[action];
  int cy = ctrl_y_of(s) + kDy[action];
  // clipped at controller walls
  cx = cx < 0 ? 0 : (cx >= ctrl_width_ ? ctrl_width_ - 1 : cx);
  cy = cy < 0 ? 0 : (cy >= ctrl_width_ ? ctrl_width_ - 1 : cy);

  int selected = selected_of(s);
  int button = button_at(cx, cy);
  if (button >= 0) selected = button;

  int countdown = countdown_of(s) - 1;

  Transition tr;
  if (countdown > 0) {
    tr.next = make_state(base_state_of(s), cx, cy, selected, countdown);
    tr.reward = 0.0;
    return tr;
  }

  // Executing step: advance the base environment by one time-step.
  EnvState base_state = base_state_of(s);
  if (selected == kNoop) {
    // Base time advances without a move; the step cost still applies.
    tr.next = make_state(base_state, cx, cy, kNoop, ctrl_width_);
    tr.reward = -1.0;
    tr.terminal = false;
  } else {
    Transition bt = base_.step(base_state, selected, rng);
    tr.next = make_state(bt.next, cx, cy, kNoop, ctrl_width_);
    tr.reward = bt.reward;
    tr.terminal = bt.terminal;
    tr.next.terminal = bt.terminal;
  }
  return tr;
}

void HierarchicalEnv::encode(const EnvState& s, float* out) const {
  base_.encode(base_state_of(s), out);
  int off = base_.spec().observation_dim;
  int n = ctrl_width_ * ctrl_width_;
  for (int i = 0; i < n + 5 + ctrl_width_; ++i) out[off + i] = 0.0f;
  out[off + ctrl_y_of(s) * ctrl_width_ + ctrl_x_of(s)] = 1.0f;
  out[off + n + selected_of(s)] = 1.0f;
  out[off + n + 5 + (countdown_of(s) - 1)] = 1.0f;
}

}  // namespace optit::env
