#pragma once
#include <vector>

namespace optit::analysis {

// Cross-entropy comparison for the grid posterior made of 4 equally likely
// directional optimal policies: the best single policy against the exact
// 4-policy mixture, evaluated over a set of K states. All values come out of
// explicit enumeration; the closed forms are K*ln(4) and ln(4).
struct CeDemoReport {
  int num_states = 0;  // K
  int width = 0;
  double single_policy_ce = 0;  // = K ln 4
  double mixture_ce = 0;        // = ln 4
  double ce_gap = 0;            // single - mixture

  // Probability of the direct-to-reward action sequence from a cell with
  // `distance` cells strictly between it and the rewarding edge (so the
  // sequence has distance+1 steps): mixture vs best single policy. The ratio
  // works out to 4^distance.
  struct DirectRatio {
    int distance = 0;
    int steps = 0;
    double mixture_prob = 0;
    double single_prob = 0;
    double ratio = 0;
  };
  std::vector<DirectRatio> direct_ratios;
};

CeDemoReport posterior_ce_demo(int num_states, int grid_width);

}  // namespace optit::analysis
