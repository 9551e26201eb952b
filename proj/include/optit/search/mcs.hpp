#pragma once
#include <algorithm>
#include <cmath>
#include <vector>

#include "optit/env/env.hpp"
#include "optit/nn/model.hpp"
#include "optit/util/numerics.hpp"
#include "optit/util/stats.hpp"
#include "optit/util/threadpool.hpp"

namespace optit::search {

struct SearchConfig {
  int simulation_budget = 0;
  int rollout_length = 1;  // K
  double beta = 0.1;
  double discount = 0.99;
};

// Exponentially weighted average of the variance of rollout returns, used to
// normalize beta across problems. The value used inside the exponent is
// sqrt(sigma_bar_sq), clamped below at 1e-6.
struct RunningVariance {
  double sigma_bar_sq = 1.0;
  double decay = 0.99;

  double sigma_bar() const { return std::max(std::sqrt(sigma_bar_sq), 1e-6); }

  void update(std::span<const double> returns) {
    require(returns.size() >= 2, "RunningVariance::update: need >= 2 samples");
    sigma_bar_sq = decay * sigma_bar_sq + (1.0 - decay) * sample_variance(returns);
  }
};

struct SearchResult {
  int num_options = 0;
  int num_actions = 0;
  int m_per_pair = 0;
  std::vector<double> q_hat;    // N x A, row-major over options
  std::vector<double> p_tilde;  // N x A joint distribution
  std::vector<double> pi_tilde; // A, marginal over options
  int a_tilde = 0;
  double v_tilde = 0;
  // Per-rollout bootstrapped returns in slot order (a*N + n)*M + j; used for
  // the sigma-bar update and exposed for tests.
  std::vector<double> rollout_returns;

  double q(int n, int a) const { return q_hat[static_cast<std::size_t>(n) * num_actions + a]; }
  double p(int n, int a) const { return p_tilde[static_cast<std::size_t>(n) * num_actions + a]; }
};

// One bootstrapped rollout: s1 ~ p(.|s, a), then option n's policy for up to
// K-1 further steps, stopping early at terminal. Returns
// sum_{k<K_eff} gamma^k r_{k+1} + gamma^K_eff v(s_K_eff), with v(terminal)=0.
// Timeouts are never applied inside rollouts.
template <typename T>
double rollout(const env::Environment& model, const nn::Model<T>& m,
               const env::EnvState& start, int first_action, int option, int K,
               double discount, Rng rng) {
  require_state(!start.terminal, "rollout: start state is terminal");
  std::vector<T> obs(m.obs_dim());
  typename nn::Net<T>::Trace tr;
  const int head_ids[] = {option};

  env::Transition t = model.step(start, first_action, rng);
  double g = t.reward;
  double gamma_k = discount;
  env::EnvState state = std::move(t.next);
  if (t.terminal) return g;

  std::vector<float> obs_f(m.obs_dim());
  for (int k = 1; k < K; ++k) {
    model.encode(state, obs_f.data());
    for (int i = 0; i < m.obs_dim(); ++i) obs[i] = static_cast<T>(obs_f[i]);
    m.policy.forward(obs.data(), 1, head_ids, tr);
    int action = sample_logits(tr.head_row(option, 0), rng);
    t = model.step(state, action, rng);
    g += gamma_k * t.reward;
    gamma_k *= discount;
    if (t.terminal) return g;
    state = std::move(t.next);
  }
  model.encode(state, obs_f.data());
  for (int i = 0; i < m.obs_dim(); ++i) obs[i] = static_cast<T>(obs_f[i]);
  return g + gamma_k * m.forward_value(obs);
}

// Monte-Carlo search in the joint space of first actions and subsequent
// options. Allocates floor(budget / (A*N)) rollouts to every pair, averages
// their bootstrapped returns into Q, and converts Q into the joint
// distribution p(a,n) ~ exp(Q/(sigma_bar*beta)).
template <typename T>
SearchResult mcs_with_options(const env::Environment& model, const nn::Model<T>& m,
                              const RunningVariance& rv, const env::EnvState& state,
                              const SearchConfig& cfg, const Rng& search_rng,
                              ThreadPool* pool = nullptr) {
  require_state(!state.terminal, "mcs_with_options: state is terminal");
  const int A = model.spec().num_actions;
  const int N = m.num_options;
  require(m.num_actions == A, "mcs_with_options: model/action-space mismatch");
  const int M = cfg.simulation_budget / (A * N);
  require(M >= 1, "mcs_with_options: simulation budget below one rollout per (action, option) pair");

  SearchResult res;
  res.num_options = N;
  res.num_actions = A;
  res.m_per_pair = M;
  res.rollout_returns.assign(static_cast<std::size_t>(M) * A * N, 0.0);

  auto run_pair = [&](int pair) {
    const int a = pair / N;
    const int n = pair % N;
    struct Live {
      env::EnvState state;
      double g;
      Rng rng;
      int slot;
    };
    std::vector<Live> live;
    live.reserve(M);
    for (int j = 0; j < M; ++j) {
      const int slot = pair * M + j;
      Rng r = search_rng.stream(static_cast<std::uint64_t>(slot));
      env::Transition t = model.step(state, a, r);
      if (t.terminal) {
        res.rollout_returns[slot] = t.reward;
      } else {
        live.push_back({std::move(t.next), t.reward, r, slot});
      }
    }

    const int head_ids[] = {n};
    std::vector<float> obs_f(m.obs_dim());
    std::vector<T> obs_batch;
    typename nn::Net<T>::Trace tr;
    double gamma_k = cfg.discount;
    for (int k = 1; k < cfg.rollout_length && !live.empty(); ++k) {
      obs_batch.resize(live.size() * m.obs_dim());
      for (std::size_t i = 0; i < live.size(); ++i) {
        model.encode(live[i].state, obs_f.data());
        for (int d = 0; d < m.obs_dim(); ++d)
          obs_batch[i * m.obs_dim() + d] = static_cast<T>(obs_f[d]);
      }
      m.policy.forward(obs_batch.data(), static_cast<int>(live.size()), head_ids, tr);
      std::size_t keep = 0;
      for (std::size_t i = 0; i < live.size(); ++i) {
        int action = sample_logits(tr.head_row(n, static_cast<int>(i)), live[i].rng);
        env::Transition t = model.step(live[i].state, action, live[i].rng);
        live[i].g += gamma_k * t.reward;
        if (t.terminal) {
          res.rollout_returns[live[i].slot] = live[i].g;
        } else {
          live[i].state = std::move(t.next);
          if (keep != i) live[keep] = std::move(live[i]);
          ++keep;
        }
      }
      live.resize(keep);
      gamma_k *= cfg.discount;
    }
    if (!live.empty()) {
      obs_batch.resize(live.size() * m.obs_dim());
      for (std::size_t i = 0; i < live.size(); ++i) {
        model.encode(live[i].state, obs_f.data());
        for (int d = 0; d < m.obs_dim(); ++d)
          obs_batch[i * m.obs_dim() + d] = static_cast<T>(obs_f[d]);
      }
      const int value_head[] = {0};
      m.value.forward(obs_batch.data(), static_cast<int>(live.size()), value_head, tr);
      for (std::size_t i = 0; i < live.size(); ++i) {
        res.rollout_returns[live[i].slot] =
            live[i].g + gamma_k * static_cast<double>(tr.head[0][i]);
      }
    }
  };

  const int pairs = A * N;
  if (pool != nullptr && pool->size() > 1) {
    pool->parallel_for(pairs, [&](std::int64_t b, std::int64_t e) {
      for (std::int64_t p = b; p < e; ++p) run_pair(static_cast<int>(p));
    });
  } else {
    for (int p = 0; p < pairs; ++p) run_pair(p);
  }

  // Q means in slot order, then the joint softmax at temperature sigma*beta.
  res.q_hat.assign(static_cast<std::size_t>(N) * A, 0.0);
  for (int a = 0; a < A; ++a) {
    for (int n = 0; n < N; ++n) {
      const int pair = a * N + n;
      double sum = 0;
      for (int j = 0; j < M; ++j) sum += res.rollout_returns[static_cast<std::size_t>(pair) * M + j];
      res.q_hat[static_cast<std::size_t>(n) * A + a] = sum / M;
    }
  }

  const double temp = rv.sigma_bar() * cfg.beta;
  double qmax = *std::max_element(res.q_hat.begin(), res.q_hat.end());
  res.p_tilde.resize(res.q_hat.size());
  double z = 0;
  for (std::size_t i = 0; i < res.q_hat.size(); ++i) {
    res.p_tilde[i] = std::exp((res.q_hat[i] - qmax) / temp);
    z += res.p_tilde[i];
  }
  for (double& p : res.p_tilde) p /= z;
  res.pi_tilde.assign(A, 0.0);
  for (int n = 0; n < N; ++n)
    for (int a = 0; a < A; ++a) res.pi_tilde[a] += res.p(n, a);

  // Greedy extraction reads only Q; ties break toward the lowest (a, n).
  res.a_tilde = 0;
  double best = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < A; ++a) {
    double col_best = -std::numeric_limits<double>::infinity();
    for (int n = 0; n < N; ++n) col_best = std::max(col_best, res.q(n, a));
    if (col_best > best) {
      best = col_best;
      res.a_tilde = a;
    }
  }
  res.v_tilde = best;
  return res;
}

}  // namespace optit::search
