#pragma once
#include "optit/env/procmaze.hpp"

namespace optit::env {

// ElectricProcMaze driven through a C x C controller grid. Buttons sit at the
// centre of each controller edge and select the base action to execute; every
// C-th controller step the selected action is applied to the base environment
// and the selection resets to no-op. Rewards are zero except on executing
// steps, where the base reward passes through.
class HierarchicalEnv : public Environment {
 public:
  HierarchicalEnv(int base_width, double wall_penalty, int controller_width = 8,
                  double discount = 0.99);

  const MdpSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) const override;
  Transition step(const EnvState& s, int action, Rng& rng) const override;
  void encode(const EnvState& s, float* out) const override;

  int controller_width() const { return ctrl_width_; }
  const ProcMazeEnv& base() const { return base_; }

  // Selected-action ids: 0..3 are base moves, 4 = no-op.
  static constexpr int kNoop = 4;

  // Button index (same id as the base action it selects) or -1.
  int button_at(int cx, int cy) const;

  // Payload: [base payload..., cx, cy, selected, countdown].
  int ctrl_x_of(const EnvState& s) const { return s.w[base_payload_]; }
  int ctrl_y_of(const EnvState& s) const { return s.w[base_payload_ + 1]; }
  int selected_of(const EnvState& s) const { return s.w[base_payload_ + 2]; }
  int countdown_of(const EnvState& s) const { return s.w[base_payload_ + 3]; }
  EnvState base_state_of(const EnvState& s) const;
  EnvState make_state(const EnvState& base_state, int cx, int cy, int selected,
                      int countdown) const;

 private:
  ProcMazeEnv base_;
  int ctrl_width_;
  int base_payload_;
  MdpSpec spec_;
};

}  // namespace optit::env
