#pragma once
#include <vector>

#include "optit/nn/net.hpp"
#include "optit/util/numerics.hpp"

namespace optit::nn {

// Option-set parameters: a shared trunk with N option heads (num_actions
// logits each) and an option-selection head rho (N logits), optionally an
// N-unit termination head; plus a separate value network of equal size.
template <typename T>
struct Model {
  Net<T> policy;
  Net<T> value;
  int num_options = 1;
  int num_actions = 2;
  bool has_psi = false;

  static Model make(int obs_dim, const std::vector<int>& hidden, int num_options,
                    int num_actions, bool has_psi = false) {
    require(num_options >= 1, "Model: need at least one option");
    require(num_actions >= 2, "Model: need at least two actions");
    Model m;
    m.num_options = num_options;
    m.num_actions = num_actions;
    m.has_psi = has_psi;
    std::vector<int> head_dims(num_options, num_actions);
    head_dims.push_back(num_options);               // rho
    if (has_psi) head_dims.push_back(num_options);  // psi logits
    m.policy = Net<T>(obs_dim, hidden, head_dims);
    m.value = Net<T>(obs_dim, hidden, {1});
    return m;
  }

  // Trunk layers get fan-in-scaled uniform weights. Option and termination
  // heads get tiny random weights: near-uniform initial policies, but the
  // permutation symmetry among options is broken (identical heads would
  // receive identical mixture-loss gradients forever). The rho head stays
  // zero (exactly uniform) and the value head stays zero (v = 0).
  void init_params(Rng& rng) {
    Rng pr = rng.stream(1);
    Rng vr = rng.stream(2);
    policy.init_params(pr);
    value.init_params(vr);
    Rng hr = rng.stream(3);
    auto fill_head = [&](int h) {
      const LinearSpec& l = policy.head_layer(h);
      double scale = 0.1 / std::sqrt(static_cast<double>(l.in));
      for (std::size_t i = 0; i < static_cast<std::size_t>(l.in) * l.out; ++i) {
        policy.params()[l.w + i] = static_cast<T>((2.0 * hr.uniform() - 1.0) * scale);
      }
    };
    for (int n = 0; n < num_options; ++n) fill_head(option_head(n));
    if (has_psi) fill_head(psi_head());
  }

  int obs_dim() const { return policy.input_dim(); }
  int option_head(int n) const { return n; }
  int rho_head() const { return num_options; }
  int psi_head() const {
    require(has_psi, "Model: no termination head configured");
    return num_options + 1;
  }

  std::vector<int> policy_head_ids(bool with_psi) const {
    std::vector<int> ids;
    for (int n = 0; n < num_options; ++n) ids.push_back(n);
    ids.push_back(rho_head());
    if (with_psi) ids.push_back(psi_head());
    return ids;
  }

  // Log-probabilities of every option head (N x A, row-major) and of rho (N).
  void forward_policy(std::span<const T> obs, std::vector<double>& option_log_probs,
                      std::vector<double>& rho_log_probs) const {
    require(static_cast<int>(obs.size()) == obs_dim(),
            "forward_policy: observation dimension mismatch");
    typename Net<T>::Trace tr;
    std::vector<int> ids = policy_head_ids(false);
    policy.forward(obs.data(), 1, ids, tr);
    option_log_probs.resize(static_cast<std::size_t>(num_options) * num_actions);
    for (int n = 0; n < num_options; ++n) {
      log_softmax(tr.head_row(n, 0),
                  std::span<double>(option_log_probs.data() +
                                        static_cast<std::size_t>(n) * num_actions,
                                    num_actions));
    }
    rho_log_probs.resize(num_options);
    log_softmax(tr.head_row(rho_head(), 0), std::span<double>(rho_log_probs));
  }

  double forward_value(std::span<const T> obs) const {
    require(static_cast<int>(obs.size()) == obs_dim(),
            "forward_value: observation dimension mismatch");
    typename Net<T>::Trace tr;
    const int head0[] = {0};
    value.forward(obs.data(), 1, head0, tr);
    return static_cast<double>(tr.head[0][0]);
  }
};

}  // namespace optit::nn
