#include <doctest.h>

#include <atomic>
#include <cmath>

#include "gradient_check.hpp"
#include "optit/env/compass.hpp"
#include "optit/search/mcs.hpp"

using namespace optit;
using namespace optit::testing;

namespace {

// Deterministic chain: state = position; moving right advances, reaching the
// end yields `end_reward` and terminates; every step costs `step_reward`.
class ChainEnv : public env::Environment {
 public:
  ChainEnv(int length, double step_reward, double end_reward, int num_actions = 2)
      : length_(length), step_reward_(step_reward), end_reward_(end_reward) {
    spec_.num_actions = num_actions;
    spec_.observation_dim = length + 1;
    spec_.discount = 1.0;
  }
  const env::MdpSpec& spec() const override { return spec_; }
  env::EnvState reset(Rng&) const override {
    env::EnvState s;
    s.w = {0};
    return s;
  }
  env::Transition step(const env::EnvState& s, int action, Rng&) const override {
    check_step_args(s, action);
    env::Transition tr;
    int pos = s.w[0];
    if (action == 1) ++pos;  // action 1 = advance
    tr.next.w = {pos};
    tr.reward = step_reward_;
    if (pos >= length_) {
      tr.reward += end_reward_;
      tr.terminal = true;
      tr.next.terminal = true;
    }
    return tr;
  }
  void encode(const env::EnvState& s, float* out) const override {
    for (int i = 0; i <= length_; ++i) out[i] = 0.0f;
    out[s.w[0]] = 1.0f;
  }

 private:
  int length_;
  double step_reward_, end_reward_;
  env::MdpSpec spec_;
};

// Counts generative-model step calls, for budget-exactness checks. A step
// counter appended to the state payload makes every rollout state unique, so
// first-step counts cannot be confused with mid-rollout revisits.
class CountingEnv : public env::Environment {
 public:
  explicit CountingEnv(const env::Environment& inner) : inner_(inner) {}
  const env::MdpSpec& spec() const override { return inner_.spec(); }
  env::EnvState reset(Rng& rng) const override { return with_depth(inner_.reset(rng), 0); }
  env::Transition step(const env::EnvState& s, int a, Rng& rng) const override {
    int depth = s.w.back();
    if (depth == 0) ++root_action_counts_[a];
    ++total_steps_;
    env::EnvState bare = s;
    bare.w.pop_back();
    env::Transition tr = inner_.step(bare, a, rng);
    tr.next = with_depth(tr.next, depth + 1);
    return tr;
  }
  void encode(const env::EnvState& s, float* out) const override {
    env::EnvState bare = s;
    bare.w.pop_back();
    inner_.encode(bare, out);
  }

  void arm(int num_actions) const {
    root_action_counts_.assign(num_actions, 0);
    total_steps_ = 0;
  }
  const std::vector<int>& root_counts() const { return root_action_counts_; }
  long long total_steps() const { return total_steps_.load(); }

 private:
  static env::EnvState with_depth(env::EnvState s, int depth) {
    s.w.push_back(depth);
    return s;
  }
  const env::Environment& inner_;
  mutable std::vector<int> root_action_counts_;
  mutable std::atomic<long long> total_steps_{0};
};

// Zero trunk + head biases give exact, hand-settable policies and values.
template <typename T>
nn::Model<T> bias_model(int obs_dim, int options, int actions,
                        const std::vector<std::vector<double>>& head_bias,
                        double value_bias = 0.0) {
  auto m = nn::Model<T>::make(obs_dim, {4}, options, actions);
  for (int n = 0; n < static_cast<int>(head_bias.size()); ++n) {
    const auto& l = m.policy.head_layer(n);
    for (std::size_t i = 0; i < head_bias[n].size(); ++i) {
      m.policy.params()[l.b + i] = static_cast<T>(head_bias[n][i]);
    }
  }
  m.value.params()[m.value.head_layer(0).b] = static_cast<T>(value_bias);
  return m;
}

}  // namespace

TEST_CASE("rollout: terminal at the first step returns just r1") {
  ChainEnv chain(1, 0.0, 0.5);
  auto m = bias_model<double>(2, 1, 2, {{0, 0}});
  Rng rng(1);
  env::EnvState s = chain.reset(rng);
  double g = search::rollout(chain, m, s, 1, 0, 5, 0.9, rng.stream(0));
  CHECK(g == doctest::Approx(0.5));
}

TEST_CASE("rollout: zero rewards bootstrap gamma^K * v") {
  // advance forever (never terminates within K): option always picks action 0
  ChainEnv chain(1000, 0.0, 0.0);
  auto m = bias_model<double>(1001, 1, 2, {{40.0, -40.0}}, /*value_bias=*/0.7);
  Rng rng(2);
  env::EnvState s = chain.reset(rng);
  const int K = 6;
  double g = search::rollout(chain, m, s, 0, 0, K, 0.9, rng.stream(0));
  CHECK(g == doctest::Approx(std::pow(0.9, K) * 0.7).epsilon(1e-6));
}

TEST_CASE("rollout: Monte-Carlo mean matches exhaustive enumeration") {
  // 2-state deterministic MDP (chain of length 2), A=2, stochastic option.
  const int K = 4;
  const double gamma = 0.9;
  ChainEnv chain(2, -0.125, 1.0);
  // option logits give p(advance) = sigma(0.8)
  auto m = bias_model<double>(3, 1, 2, {{0.0, 0.8}}, 0.3);
  Rng rng(3);
  env::EnvState root = chain.reset(rng);

  // Exact expectation by enumerating all action sequences of length K-1
  // (first action fixed to 0 = stay), weighted by the option's probabilities.
  // Every mask carries its full probability, so the 2^suffix copies of an
  // early-terminating trajectory sum to exactly its prefix probability.
  double p_adv = 1.0 / (1.0 + std::exp(-0.8));
  double exact = 0;
  for (int mask = 0; mask < (1 << (K - 1)); ++mask) {
    double weight = 1.0;
    for (int k = 1; k < K; ++k) {
      weight *= ((mask >> (k - 1)) & 1) == 1 ? p_adv : 1 - p_adv;
    }
    double g = -0.125;  // first transition (stay)
    int pos = 0;
    double gamma_k = gamma;
    bool terminated = false;
    for (int k = 1; k < K && !terminated; ++k) {
      if (((mask >> (k - 1)) & 1) == 1) ++pos;
      double r = -0.125 + (pos >= 2 ? 1.0 : 0.0);
      g += gamma_k * r;
      gamma_k *= gamma;
      if (pos >= 2) terminated = true;
    }
    if (!terminated) g += gamma_k * 0.3;  // bootstrap
    exact += weight * g;
  }

  const int samples = 40000;
  double acc = 0;
  for (int j = 0; j < samples; ++j) {
    acc += search::rollout(chain, m, root, 0, 0, K, gamma, rng.stream(j));
  }
  double mc = acc / samples;
  // returns are bounded by ~[-0.5, 1.5]; 3 sigma with sd <= 1
  CHECK(std::fabs(mc - exact) < 3.0 / std::sqrt(static_cast<double>(samples)));
}

TEST_CASE("mcs: budget 1000 with A=4, N=5 allocates exactly 50 per pair") {
  env::CompassEnv compass(9);
  CountingEnv counting(compass);
  auto m = nn::Model<float>::make(compass.spec().observation_dim, {8}, 5, 4);
  Rng rng(4);
  m.init_params(rng);
  env::EnvState root = counting.reset(rng);
  counting.arm(4);

  search::SearchConfig cfg{1000, 3, 0.1, 0.99};
  search::RunningVariance rv;
  search::SearchResult res = search::mcs_with_options(counting, m, rv, root, cfg,
                                                      rng.stream(1), nullptr);
  CHECK(res.m_per_pair == 50);
  CHECK(res.rollout_returns.size() == 1000);
  // every root action got M * N first transitions
  for (int a = 0; a < 4; ++a) CHECK(counting.root_counts()[a] == 250);
  // config error when the budget cannot give every pair a rollout
  search::SearchConfig bad{19, 3, 0.1, 0.99};
  CHECK_THROWS_AS(
      search::mcs_with_options(counting, m, rv, root, bad, rng.stream(2), nullptr),
      std::invalid_argument);
}

TEST_CASE("mcs: hand-expanded 2x2 fixture") {
  // Chain of length 1: action 1 terminates with +1 (plus step cost 0),
  // action 0 stays. Options: option 0 always advances, option 1 never.
  ChainEnv chain(1, -0.25, 1.25);
  auto m = bias_model<double>(2, 2, 2, {{-40.0, 40.0}, {40.0, -40.0}}, 0.5);
  Rng rng(5);
  env::EnvState root = chain.reset(rng);
  search::SearchConfig cfg{8, 2, 0.5, 1.0};
  search::RunningVariance rv;  // sigma_bar = 1
  search::SearchResult res =
      search::mcs_with_options(chain, m, rv, root, cfg, rng.stream(0), nullptr);
  REQUIRE(res.m_per_pair == 2);

  // Q by hand: first action 1 terminates immediately: G = 1.0 for both options.
  // First action 0: r = -0.25, then option 0 advances (G = -0.25 + 1.0) and
  // option 1 stays then bootstraps v=0.5 (G = -0.25 - 0.25 + 0.5).
  CHECK(res.q(0, 1) == doctest::Approx(1.0));
  CHECK(res.q(1, 1) == doctest::Approx(1.0));
  CHECK(res.q(0, 0) == doctest::Approx(0.75));
  CHECK(res.q(1, 0) == doctest::Approx(0.0));

  // p ~ exp(Q / (sigma * beta)) with sigma*beta = 0.5
  double e00 = std::exp(0.75 / 0.5), e01 = std::exp(1.0 / 0.5);
  double e10 = std::exp(0.0 / 0.5), e11 = std::exp(1.0 / 0.5);
  double z = e00 + e01 + e10 + e11;
  CHECK(res.p(0, 0) == doctest::Approx(e00 / z).epsilon(1e-9));
  CHECK(res.p(0, 1) == doctest::Approx(e01 / z).epsilon(1e-9));
  CHECK(res.p(1, 0) == doctest::Approx(e10 / z).epsilon(1e-9));
  CHECK(res.p(1, 1) == doctest::Approx(e11 / z).epsilon(1e-9));
  CHECK(res.pi_tilde[0] == doctest::Approx((e00 + e10) / z).epsilon(1e-9));
  CHECK(res.pi_tilde[1] == doctest::Approx((e01 + e11) / z).epsilon(1e-9));
  double pi_sum = res.pi_tilde[0] + res.pi_tilde[1];
  CHECK(std::fabs(pi_sum - 1.0) < 1e-9);
  CHECK(res.a_tilde == 1);
  CHECK(res.v_tilde == doctest::Approx(1.0));
}

TEST_CASE("mcs: equal Q gives uniform distributions; beta only tempers p") {
  // constant rewards: all Q identical
  ChainEnv chain(1000, -1.0, 0.0);
  auto m = nn::Model<float>::make(1001, {4}, 3, 2);
  Rng rng(6);
  m.init_params(rng);
  env::EnvState root = chain.reset(rng);
  search::RunningVariance rv;
  search::SearchConfig cfg{30, 1, 0.1, 1.0};  // K=1: no policy steps at all
  search::SearchResult res =
      search::mcs_with_options(chain, m, rv, root, cfg, rng.stream(0), nullptr);
  for (double p : res.p_tilde) CHECK(p == doctest::Approx(1.0 / 6).epsilon(1e-9));
  for (double p : res.pi_tilde) CHECK(p == doctest::Approx(0.5).epsilon(1e-9));

  // large beta flattens p but argmax reads only Q
  ChainEnv chain2(1, -0.25, 1.25);
  auto m2 = bias_model<float>(2, 2, 2, {{-40.0, 40.0}, {40.0, -40.0}}, 0.5);
  search::SearchConfig small_beta{8, 2, 0.01, 1.0};
  search::SearchConfig big_beta{8, 2, 1e6, 1.0};
  env::EnvState root2 = chain2.reset(rng);
  auto r1 = search::mcs_with_options(chain2, m2, rv, root2, small_beta, rng.stream(1), nullptr);
  auto r2 = search::mcs_with_options(chain2, m2, rv, root2, big_beta, rng.stream(1), nullptr);
  CHECK(r1.a_tilde == r2.a_tilde);
  CHECK(r1.v_tilde == doctest::Approx(r2.v_tilde));
  for (double p : r2.pi_tilde) CHECK(p == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("mcs: lockstep batching matches the serial rollout reference") {
  env::CompassEnv compass(9);
  auto m = nn::Model<float>::make(compass.spec().observation_dim, {8, 8}, 3, 4);
  Rng rng(7);
  randomize_params(m.policy, rng);
  randomize_params(m.value, rng);
  env::EnvState root = compass.reset(rng);
  search::SearchConfig cfg{24, 5, 0.1, 0.95};
  search::RunningVariance rv;
  Rng search_rng = rng.stream(42);
  search::SearchResult res =
      search::mcs_with_options(compass, m, rv, root, cfg, search_rng, nullptr);
  const int M = res.m_per_pair;
  for (int a = 0; a < 4; ++a) {
    for (int n = 0; n < 3; ++n) {
      for (int j = 0; j < M; ++j) {
        int slot = (a * 3 + n) * M + j;
        double ref = search::rollout(compass, m, root, a, n, cfg.rollout_length,
                                     cfg.discount, search_rng.stream(slot));
        CHECK(res.rollout_returns[slot] == doctest::Approx(ref).epsilon(1e-12));
      }
    }
  }
}

TEST_CASE("mcs: N=1 reduces to primitive-action search, bitwise") {
  env::CompassEnv compass(9);
  auto m = nn::Model<float>::make(compass.spec().observation_dim, {8}, 1, 4);
  Rng rng(8);
  randomize_params(m.policy, rng);
  env::EnvState root = compass.reset(rng);
  search::SearchConfig cfg{40, 6, 0.2, 0.99};
  search::RunningVariance rv;
  Rng search_rng = rng.stream(9);
  search::SearchResult res =
      search::mcs_with_options(compass, m, rv, root, cfg, search_rng, nullptr);

  // test-local primitive MCS with the same stream convention
  const int M = 40 / 4;
  std::vector<double> q(4, 0.0);
  for (int a = 0; a < 4; ++a) {
    for (int j = 0; j < M; ++j) {
      q[a] += search::rollout(compass, m, root, a, 0, cfg.rollout_length, cfg.discount,
                              search_rng.stream(a * M + j));
    }
    q[a] /= M;
  }
  int best = 0;
  for (int a = 1; a < 4; ++a) {
    if (q[a] > q[best]) best = a;
  }
  for (int a = 0; a < 4; ++a) CHECK(res.q(0, a) == doctest::Approx(q[a]).epsilon(1e-12));
  CHECK(res.a_tilde == best);
  double qmax = *std::max_element(q.begin(), q.end());
  double z = 0;
  std::vector<double> p(4);
  for (int a = 0; a < 4; ++a) {
    p[a] = std::exp((q[a] - qmax) / (rv.sigma_bar() * cfg.beta));
    z += p[a];
  }
  for (int a = 0; a < 4; ++a) {
    CHECK(res.pi_tilde[a] == doctest::Approx(p[a] / z).epsilon(1e-9));
  }
}

TEST_CASE("mcs: result is identical for any worker thread count") {
  env::CompassEnv compass(15);
  auto m = nn::Model<float>::make(compass.spec().observation_dim, {16}, 4, 4);
  Rng rng(10);
  randomize_params(m.policy, rng);
  randomize_params(m.value, rng);
  env::EnvState root = compass.reset(rng);
  search::SearchConfig cfg{80, 8, 0.1, 0.99};
  search::RunningVariance rv;
  Rng search_rng = rng.stream(11);

  ThreadPool pool1(1), pool7(7);
  auto r1 = search::mcs_with_options(compass, m, rv, root, cfg, search_rng, &pool1);
  auto r7 = search::mcs_with_options(compass, m, rv, root, cfg, search_rng, &pool7);
  auto r0 = search::mcs_with_options(compass, m, rv, root, cfg, search_rng, nullptr);
  CHECK(r1.rollout_returns == r7.rollout_returns);
  CHECK(r0.rollout_returns == r7.rollout_returns);
  CHECK(r1.q_hat == r7.q_hat);
  CHECK(r1.pi_tilde == r7.pi_tilde);
  CHECK(r1.a_tilde == r7.a_tilde);
  CHECK(r1.v_tilde == r7.v_tilde);
}

TEST_CASE("running variance: decay behaviour and clamping") {
  search::RunningVariance rv;
  rv.decay = 0.0;
  std::vector<double> batch = {1.0, 3.0, 5.0};
  rv.update(batch);
  CHECK(rv.sigma_bar_sq == doctest::Approx(4.0));  // unbiased variance
  CHECK(rv.sigma_bar() == doctest::Approx(2.0));

  // constant returns decay sigma toward the clamp
  search::RunningVariance rv2;
  rv2.decay = 0.9;
  std::vector<double> constant(10, 2.5);
  for (int i = 0; i < 400; ++i) rv2.update(constant);
  CHECK(rv2.sigma_bar_sq < 1e-13);
  CHECK(rv2.sigma_bar() == doctest::Approx(1e-6));

  // iid unit-variance stream settles near 1
  search::RunningVariance rv3;
  rv3.decay = 0.99;
  Rng rng(12);
  std::vector<double> sample(64);
  for (int i = 0; i < 1000; ++i) {
    for (auto& x : sample) x = (rng.uniform() - 0.5) * std::sqrt(12.0);
    rv3.update(sample);
  }
  CHECK(rv3.sigma_bar_sq == doctest::Approx(1.0).epsilon(0.1));

  std::vector<double> one = {1.0};
  CHECK_THROWS_AS(rv3.update(one), std::invalid_argument);
}
