#pragma once
#include "optit/env/env.hpp"

namespace optit::env {

// Square grid; episodes start on a uniformly random interior cell and end on
// entering any edge cell. One edge (resampled per episode, hidden from the
// observation) pays +1, the other three pay -1. Observation is the one-hot
// (x, y) position only.
class CompassEnv : public Environment {
 public:
  explicit CompassEnv(int width, double discount = 0.99);

  const MdpSpec& spec() const override { return spec_; }
  EnvState reset(Rng& rng) const override;
  Transition step(const EnvState& s, int action, Rng& rng) const override;
  void encode(const EnvState& s, float* out) const override;

  int width() const { return width_; }

  // State payload accessors (x, y, reward_edge). Edges: 0=N(y=0), 1=S, 2=W, 3=E.
  static int x_of(const EnvState& s) { return s.w[0]; }
  static int y_of(const EnvState& s) { return s.w[1]; }
  static int reward_edge_of(const EnvState& s) { return s.w[2]; }
  static EnvState make_state(int x, int y, int reward_edge);

 private:
  int edge_of(int x, int y) const;  // -1 if interior

  int width_;
  MdpSpec spec_;
};

}  // namespace optit::env
