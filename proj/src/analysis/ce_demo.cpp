#include "optit/analysis/ce_demo.hpp"

#include <cmath>

#include "optit/util/require.hpp"

namespace optit::analysis {

CeDemoReport posterior_ce_demo(int num_states, int grid_width) {
  require(num_states >= 1, "posterior_ce_demo: need at least one state");
  CeDemoReport rep;
  rep.num_states = num_states;
  rep.width = grid_width;

  // Posterior: 4 directional policies, each deterministic and distinct,
  // weighted 1/4. The per-state predictive marginal is therefore uniform over
  // the 4 actions, which is also the cross-entropy-optimal single policy.
  const int policies = 4;
  const double rho = 1.0 / policies;
  double marginal[4] = {0, 0, 0, 0};
  for (int p = 0; p < policies; ++p) marginal[p] += rho;  // policy p always takes action p

  // Best single policy: CE summed over the K states of the sequence.
  // Kahan compensation keeps the long sum exact to well below 1e-12.
  double single_ce = 0, comp = 0;
  for (int k = 0; k < num_states; ++k) {
    for (int p = 0; p < policies; ++p) {
      double term = rho * -std::log(marginal[p]) - comp;
      double next = single_ce + term;
      comp = (next - single_ce) - term;
      single_ce = next;
    }
  }
  rep.single_policy_ce = single_ce;

  // Mixture: joint probability of policy p's K-step action sequence is
  // sum_q rho * prod_k [q's action == p's action] = rho for distinct policies.
  double mixture_ce = 0;
  for (int p = 0; p < policies; ++p) {
    double seq_prob = 0;
    for (int q = 0; q < policies; ++q) {
      double prod = 1.0;
      for (int k = 0; k < num_states; ++k) prod *= q == p ? 1.0 : 0.0;
      seq_prob += rho * prod;
    }
    mixture_ce += rho * -std::log(seq_prob);
  }
  rep.mixture_ce = mixture_ce;
  rep.ce_gap = single_ce - mixture_ce;

  // Direct path to the rewarding edge from `distance` cells away: the move
  // sequence has distance+1 steps of the same direction.
  for (int d = 1; d <= 3; ++d) {
    CeDemoReport::DirectRatio r;
    r.distance = d;
    r.steps = d + 1;
    double mix = 0;
    for (int q = 0; q < policies; ++q) {
      double prod = 1.0;
      for (int k = 0; k < r.steps; ++k) prod *= q == 0 ? 1.0 : 0.0;  // direction 0 w.l.o.g.
      mix += rho * prod;
    }
    r.mixture_prob = mix;
    double single = 1.0;
    for (int k = 0; k < r.steps; ++k) single *= marginal[0];
    r.single_prob = single;
    r.ratio = mix / single;
    rep.direct_ratios.push_back(r);
  }
  return rep;
}

}  // namespace optit::analysis
