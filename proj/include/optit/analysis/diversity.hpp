#pragma once
#include <functional>
#include <span>
#include <vector>

#include "optit/env/hierarchical.hpp"
#include "optit/nn/model.hpp"

namespace optit::analysis {

// Behavioural diversity of a set of options in the hierarchical environment:
// which button each option reaches first from random initializations, and how
// much the option identity tells us about it (plug-in entropies, no bias
// correction). Rollouts that hit no button within the horizon are discarded;
// (state, option) cells with no kept rollouts are skipped and counted.
struct DiversityReport {
  int num_options = 0;
  int states = 0;
  std::vector<double> f_marginal;               // per button, pooled over everything
  std::vector<std::vector<double>> f_by_option; // option -> per-button frequency
  double entropy_marginal = 0;                  // H(i)
  std::vector<double> entropy_by_option;        // H(i|n)
  double mi_marginal = 0;
  double mi_marginal_ci95 = 0;
  double entropy_state_mean = 0;   // mean_s H_s(i)
  double mi_state_mean = 0;        // mean_s [H_s(i) - avg_n H_s(i|n)]
  double mi_state_ci95 = 0;
  double kept_fraction = 0;
  int skipped_state_option_cells = 0;
};

using OptionActionFn =
    std::function<int(std::span<const float> obs, int option, Rng& rng)>;

DiversityReport option_diversity(const env::HierarchicalEnv& e, const OptionActionFn& fn,
                                 int num_options, int n_states, int n_rollouts,
                                 int horizon, Rng rng, int bootstrap = 200);

// Rolls the model's option policies.
DiversityReport option_diversity(const env::HierarchicalEnv& e, const nn::Model<float>& m,
                                 int n_states, int n_rollouts, int horizon, Rng rng,
                                 int bootstrap = 200);

}  // namespace optit::analysis
