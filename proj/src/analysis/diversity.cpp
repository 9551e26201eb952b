#include "optit/analysis/diversity.hpp"

#include <cmath>

#include "optit/util/numerics.hpp"
#include "optit/util/stats.hpp"

namespace optit::analysis {

namespace {

constexpr int kButtons = 4;

double entropy(std::span<const double> f) {
  double h = 0;
  for (double p : f) {
    if (p > 0) h -= p * std::log(p);
  }
  return h;
}

struct Counts {
  // counts[state][option][button]
  std::vector<std::vector<std::vector<std::int64_t>>> c;
  std::int64_t total_rollouts = 0;
  std::int64_t kept = 0;

  std::int64_t cell_total(int s, int n) const {
    std::int64_t t = 0;
    for (int b = 0; b < kButtons; ++b) t += c[s][n][b];
    return t;
  }
};

// Pooled and state-conditional MI over an arbitrary subset of states.
struct MiEstimates {
  double mi_marginal = 0;
  double h_marginal = 0;
  std::vector<double> f_marginal = std::vector<double>(kButtons, 0.0);
  std::vector<std::vector<double>> f_by_option;
  std::vector<double> h_by_option;
  double mi_state_mean = 0;
  double h_state_mean = 0;
  int skipped_cells = 0;
};

MiEstimates estimate(const Counts& counts, std::span<const int> state_ids, int num_options) {
  MiEstimates est;
  std::vector<std::vector<std::int64_t>> pooled(
      num_options, std::vector<std::int64_t>(kButtons, 0));
  for (int s : state_ids) {
    for (int n = 0; n < num_options; ++n) {
      for (int b = 0; b < kButtons; ++b) pooled[n][b] += counts.c[s][n][b];
    }
  }
  std::int64_t total = 0;
  std::vector<std::int64_t> per_button(kButtons, 0);
  for (int n = 0; n < num_options; ++n) {
    for (int b = 0; b < kButtons; ++b) {
      total += pooled[n][b];
      per_button[b] += pooled[n][b];
    }
  }
  est.f_by_option.assign(num_options, std::vector<double>(kButtons, 0.0));
  est.h_by_option.assign(num_options, 0.0);
  if (total > 0) {
    for (int b = 0; b < kButtons; ++b)
      est.f_marginal[b] = static_cast<double>(per_button[b]) / total;
    est.h_marginal = entropy(est.f_marginal);
    double mean_cond = 0;
    int used = 0;
    for (int n = 0; n < num_options; ++n) {
      std::int64_t tn = 0;
      for (int b = 0; b < kButtons; ++b) tn += pooled[n][b];
      if (tn == 0) continue;
      for (int b = 0; b < kButtons; ++b)
        est.f_by_option[n][b] = static_cast<double>(pooled[n][b]) / tn;
      est.h_by_option[n] = entropy(est.f_by_option[n]);
      mean_cond += est.h_by_option[n];
      ++used;
    }
    if (used > 0) est.mi_marginal = est.h_marginal - mean_cond / used;
  }

  // State-conditional: frequencies per state, averaged across states with data.
  double mi_sum = 0, h_sum = 0;
  int states_used = 0;
  std::vector<double> f(kButtons);
  for (int s : state_ids) {
    std::int64_t st = 0;
    std::vector<std::int64_t> sb(kButtons, 0);
    for (int n = 0; n < num_options; ++n) {
      for (int b = 0; b < kButtons; ++b) {
        st += counts.c[s][n][b];
        sb[b] += counts.c[s][n][b];
      }
    }
    if (st == 0) {
      est.skipped_cells += num_options;
      continue;
    }
    for (int b = 0; b < kButtons; ++b) f[b] = static_cast<double>(sb[b]) / st;
    double hs = entropy(std::span<const double>(f));
    double cond = 0;
    int used = 0;
    for (int n = 0; n < num_options; ++n) {
      std::int64_t tn = counts.cell_total(s, n);
      if (tn == 0) {
        ++est.skipped_cells;
        continue;
      }
      for (int b = 0; b < kButtons; ++b) f[b] = static_cast<double>(counts.c[s][n][b]) / tn;
      cond += entropy(std::span<const double>(f));
      ++used;
    }
    mi_sum += hs - cond / used;
    h_sum += hs;
    ++states_used;
  }
  if (states_used > 0) {
    est.mi_state_mean = mi_sum / states_used;
    est.h_state_mean = h_sum / states_used;
  }
  return est;
}

}  // namespace

DiversityReport option_diversity(const env::HierarchicalEnv& e, const OptionActionFn& fn,
                                 int num_options, int n_states, int n_rollouts,
                                 int horizon, Rng rng, int bootstrap) {
  require(num_options >= 1 && n_states >= 1 && n_rollouts >= 1 && horizon >= 1,
          "option_diversity: bad arguments");
  Counts counts;
  counts.c.assign(n_states, std::vector<std::vector<std::int64_t>>(
                                num_options, std::vector<std::int64_t>(kButtons, 0)));

  std::vector<float> obs(e.spec().observation_dim);
  for (int s = 0; s < n_states; ++s) {
    Rng state_rng = rng.stream(s);
    Rng reset_rng = state_rng.stream(0);
    env::EnvState start = e.reset(reset_rng);  // controller agent starts centered
    for (int n = 0; n < num_options; ++n) {
      for (int j = 0; j < n_rollouts; ++j) {
        Rng r = state_rng.stream(1 + static_cast<std::uint64_t>(n) * n_rollouts + j);
        env::EnvState state = start;
        ++counts.total_rollouts;
        for (int t = 0; t < horizon; ++t) {
          e.encode(state, obs.data());
          int action = fn(obs, n, r);
          env::Transition tr = e.step(state, action, r);
          state = std::move(tr.next);
          int button = e.button_at(e.ctrl_x_of(state), e.ctrl_y_of(state));
          if (button >= 0) {
            ++counts.c[s][n][button];
            ++counts.kept;
            break;
          }
          if (tr.terminal) break;
        }
      }
    }
  }

  std::vector<int> all_states(n_states);
  for (int s = 0; s < n_states; ++s) all_states[s] = s;
  MiEstimates est = estimate(counts, all_states, num_options);

  DiversityReport rep;
  rep.num_options = num_options;
  rep.states = n_states;
  rep.f_marginal = est.f_marginal;
  rep.f_by_option = est.f_by_option;
  rep.entropy_marginal = est.h_marginal;
  rep.entropy_by_option = est.h_by_option;
  rep.mi_marginal = est.mi_marginal;
  rep.entropy_state_mean = est.h_state_mean;
  rep.mi_state_mean = est.mi_state_mean;
  rep.kept_fraction =
      counts.total_rollouts > 0 ? static_cast<double>(counts.kept) / counts.total_rollouts : 0;
  rep.skipped_state_option_cells = est.skipped_cells;

  // Bootstrap over states for both MI estimates; the CI half-width is 1.96
  // times the bootstrap standard deviation.
  if (bootstrap > 1 && n_states > 1) {
    Rng boot = rng.stream(987654321);
    std::vector<double> mi_m(bootstrap), mi_s(bootstrap);
    std::vector<int> resampled(n_states);
    for (int b = 0; b < bootstrap; ++b) {
      for (int s = 0; s < n_states; ++s)
        resampled[s] = static_cast<int>(boot.below(static_cast<std::uint32_t>(n_states)));
      MiEstimates be = estimate(counts, resampled, num_options);
      mi_m[b] = be.mi_marginal;
      mi_s[b] = be.mi_state_mean;
    }
    rep.mi_marginal_ci95 = 1.96 * std::sqrt(sample_variance(mi_m));
    rep.mi_state_ci95 = 1.96 * std::sqrt(sample_variance(mi_s));
  }
  return rep;
}

DiversityReport option_diversity(const env::HierarchicalEnv& e, const nn::Model<float>& m,
                                 int n_states, int n_rollouts, int horizon, Rng rng,
                                 int bootstrap) {
  typename nn::Net<float>::Trace tr;
  OptionActionFn fn = [&](std::span<const float> obs, int option, Rng& r) {
    const int ids[] = {option};
    m.policy.forward(obs.data(), 1, ids, tr);
    return sample_logits(tr.head_row(option, 0), r);
  };
  return option_diversity(e, fn, m.num_options, n_states, n_rollouts, horizon, rng,
                          bootstrap);
}

}  // namespace optit::analysis
