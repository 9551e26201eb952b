#pragma once
#include <cmath>
#include <string>
#include <type_traits>
#include <vector>

#include "optit/nn/model.hpp"
#include "optit/util/numerics.hpp"
#include "optit/util/rng.hpp"

namespace optit::learn {

enum class LossVariant { optit, exit_sampled_seq, exit_sampled_indep, exit_exact_indep, mean_ce };

LossVariant loss_variant_from_string(const std::string& s);
std::string to_string(LossVariant v);

// A contiguous trajectory slice with its stored search policies.
template <typename T>
struct SegmentData {
  int len = 0;             // effective length (1..K)
  std::vector<T> obs;      // len x obs_dim
  std::vector<double> pi;  // len x A
};

// Independent states for the non-sequence losses and value regression.
template <typename T>
struct EntryBatch {
  int batch = 0;
  std::vector<T> obs;      // batch x obs_dim
  std::vector<double> pi;  // batch x A (policy losses)
  std::vector<double> v;   // batch (value targets)
};

// One fresh action sample per entry per update, drawn from the stored search
// policy (which does not depend on the parameters).
template <typename T>
std::vector<int> sample_segment_actions(std::span<const SegmentData<T>> segs, Rng& rng) {
  std::vector<int> actions;
  for (const auto& seg : segs) {
    const int a_dim = static_cast<int>(seg.pi.size()) / seg.len;
    for (int k = 0; k < seg.len; ++k) {
      actions.push_back(rng.categorical(
          std::span<const double>(seg.pi.data() + static_cast<std::size_t>(k) * a_dim, a_dim)));
    }
  }
  return actions;
}

template <typename T>
std::vector<int> sample_entry_actions(const EntryBatch<T>& batch, Rng& rng) {
  const int a_dim = static_cast<int>(batch.pi.size()) / batch.batch;
  std::vector<int> actions(batch.batch);
  for (int r = 0; r < batch.batch; ++r) {
    actions[r] = rng.categorical(
        std::span<const double>(batch.pi.data() + static_cast<std::size_t>(r) * a_dim, a_dim));
  }
  return actions;
}

// Joint mixture distillation loss over segments with the actions already
// sampled (deterministic; used directly by the finite-difference checks).
// With mean_ce=true computes the mean cross-entropy over options instead and
// gives rho no gradient. Per-segment losses are divided by the effective
// length and averaged over the batch. Gradients accumulate into `grad`
// (policy-net param count) when non-null.
template <typename T>
double optit_loss_with_actions(const nn::Model<T>& m,
                               std::span<const SegmentData<T>> segs,
                               std::span<const int> actions, bool mean_ce,
                               std::type_identity_t<T>* grad) {
  require(!segs.empty(), "optit loss: empty batch");
  const int N = m.num_options;
  const int A = m.num_actions;
  const double inv_batch = 1.0 / static_cast<double>(segs.size());

  std::vector<int> head_ids;
  for (int n = 0; n < N; ++n) head_ids.push_back(n);
  if (!mean_ce) head_ids.push_back(m.rho_head());

  typename nn::Net<T>::Trace tr;
  std::vector<std::vector<T>> dhead;
  std::vector<double> row_lse(static_cast<std::size_t>(N));
  std::vector<double> z(N), w(N);
  std::vector<double> p(A);

  double total = 0;
  std::size_t action_off = 0;
  for (const auto& seg : segs) {
    require(seg.len >= 1, "optit loss: empty segment");
    const int L = seg.len;
    m.policy.forward(seg.obs.data(), L, head_ids, tr);

    // lse per (row, option head), plus rho log-softmax at the first state
    row_lse.assign(static_cast<std::size_t>(L) * N, 0.0);
    for (int n = 0; n < N; ++n) {
      for (int k = 0; k < L; ++k) {
        row_lse[static_cast<std::size_t>(k) * N + n] = logsumexp(tr.head_row(n, k));
      }
    }
    double rho_lse = 0;
    if (!mean_ce) rho_lse = logsumexp(tr.head_row(m.rho_head(), 0));

    double seg_loss;
    if (!mean_ce) {
      auto rho_logits = tr.head_row(m.rho_head(), 0);
      for (int n = 0; n < N; ++n) {
        double zn = static_cast<double>(rho_logits[n]) - rho_lse;
        for (int k = 0; k < L; ++k) {
          zn += static_cast<double>(tr.head_row(n, k)[actions[action_off + k]]) -
                row_lse[static_cast<std::size_t>(k) * N + n];
        }
        z[n] = zn;
      }
      double lse_z = logsumexp(std::span<const double>(z));
      seg_loss = -lse_z / L;
      for (int n = 0; n < N; ++n) w[n] = std::exp(z[n] - lse_z);
    } else {
      double acc = 0;
      for (int n = 0; n < N; ++n) {
        for (int k = 0; k < L; ++k) {
          acc += static_cast<double>(tr.head_row(n, k)[actions[action_off + k]]) -
                 row_lse[static_cast<std::size_t>(k) * N + n];
        }
      }
      seg_loss = -acc / (N * L);
    }
    total += seg_loss * inv_batch;

    if (grad != nullptr) {
      dhead.assign(m.policy.num_heads(), {});
      for (int n = 0; n < N; ++n) {
        dhead[n].assign(static_cast<std::size_t>(L) * A, T(0));
      }
      const double scale = -inv_batch / L;
      for (int n = 0; n < N; ++n) {
        const double gn = mean_ce ? scale / N : scale * w[n];
        for (int k = 0; k < L; ++k) {
          auto logits = tr.head_row(n, k);
          const double lse = row_lse[static_cast<std::size_t>(k) * N + n];
          T* drow = dhead[n].data() + static_cast<std::size_t>(k) * A;
          const int sel = actions[action_off + k];
          for (int a = 0; a < A; ++a) {
            double pa = std::exp(static_cast<double>(logits[a]) - lse);
            drow[a] = static_cast<T>(gn * ((a == sel ? 1.0 : 0.0) - pa));
          }
        }
      }
      if (!mean_ce) {
        auto rho_logits = tr.head_row(m.rho_head(), 0);
        auto& drho = dhead[m.rho_head()];
        drho.assign(static_cast<std::size_t>(L) * N, T(0));
        double gsum = 0;
        for (int n = 0; n < N; ++n) gsum += scale * w[n];
        for (int n = 0; n < N; ++n) {
          double pn = std::exp(static_cast<double>(rho_logits[n]) - rho_lse);
          drho[n] = static_cast<T>(scale * w[n] - pn * gsum);
        }
      }
      m.policy.backward(seg.obs.data(), L, tr, head_ids, dhead, grad);
    }
    action_off += L;
  }
  return total;
}

// Single-policy losses on independent states. exact=false fits sampled actions
// from the search policy; exact=true minimizes the full cross-entropy.
template <typename T>
double exit_indep_loss_with_actions(const nn::Model<T>& m, const EntryBatch<T>& batch,
                                    bool exact, std::span<const int> actions, std::type_identity_t<T>* grad) {
  require(m.num_options == 1, "exit losses require a single option head");
  require(batch.batch >= 1, "exit loss: empty batch");
  const int A = m.num_actions;
  const int B = batch.batch;
  const int head_ids[] = {0};

  typename nn::Net<T>::Trace tr;
  m.policy.forward(batch.obs.data(), B, head_ids, tr);

  std::vector<std::vector<T>> dhead;
  if (grad != nullptr) {
    dhead.assign(m.policy.num_heads(), {});
    dhead[0].assign(static_cast<std::size_t>(B) * A, T(0));
  }

  double total = 0;
  for (int r = 0; r < B; ++r) {
    auto logits = tr.head_row(0, r);
    double lse = logsumexp(logits);
    const double* pi = batch.pi.data() + static_cast<std::size_t>(r) * A;
    if (exact) {
      double ce = 0;
      for (int a = 0; a < A; ++a) ce -= pi[a] * (static_cast<double>(logits[a]) - lse);
      total += ce / B;
      if (grad != nullptr) {
        T* drow = dhead[0].data() + static_cast<std::size_t>(r) * A;
        for (int a = 0; a < A; ++a) {
          double pa = std::exp(static_cast<double>(logits[a]) - lse);
          drow[a] = static_cast<T>((pa - pi[a]) / B);
        }
      }
    } else {
      const int sel = actions[r];
      total += -(static_cast<double>(logits[sel]) - lse) / B;
      if (grad != nullptr) {
        T* drow = dhead[0].data() + static_cast<std::size_t>(r) * A;
        for (int a = 0; a < A; ++a) {
          double pa = std::exp(static_cast<double>(logits[a]) - lse);
          drow[a] = static_cast<T>((pa - (a == sel ? 1.0 : 0.0)) / B);
        }
      }
    }
  }
  if (grad != nullptr) m.policy.backward(batch.obs.data(), B, tr, head_ids, dhead, grad);
  return total;
}

// Mean squared error against the stored search values. Gradients accumulate
// into `grad` (value-net param count).
template <typename T>
double value_loss(const nn::Model<T>& m, const EntryBatch<T>& batch, std::type_identity_t<T>* grad) {
  require(batch.batch >= 1, "value loss: empty batch");
  const int B = batch.batch;
  const int head_ids[] = {0};
  typename nn::Net<T>::Trace tr;
  m.value.forward(batch.obs.data(), B, head_ids, tr);
  double total = 0;
  std::vector<std::vector<T>> dhead;
  if (grad != nullptr) {
    dhead.assign(1, {});
    dhead[0].assign(B, T(0));
  }
  for (int r = 0; r < B; ++r) {
    double diff = static_cast<double>(tr.head[0][r]) - batch.v[r];
    total += diff * diff / B;
    if (grad != nullptr) dhead[0][r] = static_cast<T>(2.0 * diff / B);
  }
  if (grad != nullptr) m.value.backward(batch.obs.data(), B, tr, head_ids, dhead, grad);
  return total;
}

// Sampling wrappers matching the published operation shapes.
template <typename T>
double optit_loss(const nn::Model<T>& m, std::span<const SegmentData<T>> segs, Rng& rng,
                  std::type_identity_t<T>* grad) {
  std::vector<int> actions = sample_segment_actions(segs, rng);
  return optit_loss_with_actions(m, segs, std::span<const int>(actions), false, grad);
}

template <typename T>
double mean_ce_loss(const nn::Model<T>& m, std::span<const SegmentData<T>> segs, Rng& rng,
                    std::type_identity_t<T>* grad) {
  std::vector<int> actions = sample_segment_actions(segs, rng);
  return optit_loss_with_actions(m, segs, std::span<const int>(actions), true, grad);
}

template <typename T>
double exit_indep_loss(const nn::Model<T>& m, const EntryBatch<T>& batch, bool exact,
                       Rng& rng, std::type_identity_t<T>* grad) {
  std::vector<int> actions;
  if (!exact) actions = sample_entry_actions(batch, rng);
  return exit_indep_loss_with_actions(m, batch, exact, std::span<const int>(actions), grad);
}

}  // namespace optit::learn
