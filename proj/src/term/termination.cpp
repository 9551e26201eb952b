#include "optit/term/termination.hpp"

#include <cmath>
#include <cstring>
#include <fstream>

#include "optit/util/numerics.hpp"

namespace optit::term {

PsiTerms psi_from_logit(double z) {
  double sig = z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
  constexpr double lo = 1e-6, hi = 1.0 - 1e-6;
  PsiTerms t;
  bool clamped = sig < lo || sig > hi;
  t.psi = sig < lo ? lo : (sig > hi ? hi : sig);
  t.log_psi = std::log(t.psi);
  t.log_1m_psi = std::log1p(-t.psi);
  t.dlogpsi_dz = clamped ? 0.0 : 1.0 - sig;
  t.dlog1mpsi_dz = clamped ? 0.0 : -sig;
  return t;
}

namespace {

// Per-trajectory quantities the recursion consumes, pulled out of one batched
// forward pass over the K+1 states.
template <typename T>
struct Terms {
  int K = 0;  // actions
  int N = 0;
  std::vector<double> lrho;      // (K+1) x N log rho(n | s_k)
  std::vector<double> lpi_sel;   // K x N log pi_n(a_k | s_k)
  std::vector<PsiTerms> psi;     // (K+1) x N (row 0 unused)
};

template <typename T>
Terms<T> gather_terms(const nn::Model<T>& m, const TrajectoryData<T>& traj,
                      typename nn::Net<T>::Trace& tr, OpCounter* counter) {
  require(traj.len >= 2, "termination: trajectory needs at least one action");
  require(static_cast<int>(traj.actions.size()) == traj.len - 1,
          "termination: action count must be len - 1");
  const int N = m.num_options;
  const int S = traj.len;
  const int K = S - 1;

  std::vector<int> head_ids = m.policy_head_ids(true);
  m.policy.forward(traj.obs.data(), S, head_ids, tr);

  Terms<T> t;
  t.K = K;
  t.N = N;
  t.lrho.resize(static_cast<std::size_t>(S) * N);
  t.lpi_sel.resize(static_cast<std::size_t>(K) * N);
  t.psi.resize(static_cast<std::size_t>(S) * N);

  for (int k = 0; k < S; ++k) {
    log_softmax(tr.head_row(m.rho_head(), k),
                std::span<double>(t.lrho.data() + static_cast<std::size_t>(k) * N, N));
  }
  if (counter != nullptr) counter->head_rows += S;  // rho rows

  for (int k = 0; k < K; ++k) {
    for (int n = 0; n < N; ++n) {
      auto logits = tr.head_row(n, k);
      double lse = logsumexp(logits);
      t.lpi_sel[static_cast<std::size_t>(k) * N + n] =
          static_cast<double>(logits[traj.actions[k]]) - lse;
    }
  }
  if (counter != nullptr) counter->head_rows += static_cast<std::int64_t>(K) * N;

  for (int k = 1; k < S; ++k) {
    auto logits = tr.head_row(m.psi_head(), k);
    for (int n = 0; n < N; ++n) {
      t.psi[static_cast<std::size_t>(k) * N + n] =
          psi_from_logit(static_cast<double>(logits[n]));
    }
  }
  if (counter != nullptr) counter->head_rows += K;  // psi rows

  return t;
}

struct RecursionRecord {
  std::vector<double> f;    // (K+1) x N log phi
  std::vector<double> u;    // K x N
  std::vector<double> tt;   // K x N (termination branch terms)
  std::vector<double> big_t;  // K
};

template <typename T>
double run_recursion(const Terms<T>& t, RecursionRecord* rec, OpCounter* counter) {
  const int K = t.K, N = t.N;
  std::vector<double> f(static_cast<std::size_t>(K + 1) * N);
  std::vector<double> u(static_cast<std::size_t>(K) * N);
  std::vector<double> tt(static_cast<std::size_t>(K) * N);
  std::vector<double> big_t(K);

  for (int n = 0; n < N; ++n) f[n] = t.lrho[n];
  for (int k = 0; k < K; ++k) {
    double* uk = u.data() + static_cast<std::size_t>(k) * N;
    double* tk = tt.data() + static_cast<std::size_t>(k) * N;
    const double* fk = f.data() + static_cast<std::size_t>(k) * N;
    for (int n = 0; n < N; ++n) {
      uk[n] = fk[n] + t.lpi_sel[static_cast<std::size_t>(k) * N + n];
      tk[n] = uk[n] + t.psi[static_cast<std::size_t>(k + 1) * N + n].log_psi;
    }
    big_t[k] = logsumexp(std::span<const double>(tk, static_cast<std::size_t>(N)));
    double* fk1 = f.data() + static_cast<std::size_t>(k + 1) * N;
    for (int n = 0; n < N; ++n) {
      double x1 = big_t[k] + t.lrho[static_cast<std::size_t>(k + 1) * N + n];
      double x2 = uk[n] + t.psi[static_cast<std::size_t>(k + 1) * N + n].log_1m_psi;
      fk1[n] = logsumexp2(x1, x2);
      if (counter != nullptr) ++counter->recursion_cells;
    }
  }
  double result = logsumexp(std::span<const double>(
      f.data() + static_cast<std::size_t>(K) * N, static_cast<std::size_t>(N)));
  if (rec != nullptr) {
    rec->f = std::move(f);
    rec->u = std::move(u);
    rec->tt = std::move(tt);
    rec->big_t = std::move(big_t);
  }
  return result;
}

}  // namespace

template <typename T>
double trajectory_log_likelihood(const nn::Model<T>& m, const TrajectoryData<T>& traj,
                                 PhiTable* table, OpCounter* counter) {
  typename nn::Net<T>::Trace tr;
  Terms<T> terms = gather_terms(m, traj, tr, counter);
  RecursionRecord rec;
  double result = run_recursion(terms, table != nullptr ? &rec : nullptr, counter);
  if (table != nullptr) {
    table->num_options = terms.N;
    table->log_phi = std::move(rec.f);
  }
  return result;
}

template <typename T>
double brute_force_log_likelihood(const nn::Model<T>& m, const TrajectoryData<T>& traj) {
  const int N = m.num_options;
  const int K = traj.len - 1;
  require(K <= 8 && N <= 4, "brute_force_log_likelihood: enumeration bounds exceeded");

  // Plain probability-space quantities, independent of the recursion path.
  const int S = traj.len;
  std::vector<double> rho(static_cast<std::size_t>(S) * N);
  std::vector<double> pi_sel(static_cast<std::size_t>(K) * N);
  std::vector<double> psi(static_cast<std::size_t>(S) * N);
  std::vector<double> opt_logp, rho_logp;
  for (int k = 0; k < S; ++k) {
    std::span<const T> obs(traj.obs.data() + static_cast<std::size_t>(k) * m.obs_dim(),
                           m.obs_dim());
    m.forward_policy(obs, opt_logp, rho_logp);
    for (int n = 0; n < N; ++n) {
      rho[static_cast<std::size_t>(k) * N + n] = std::exp(rho_logp[n]);
      if (k < K) {
        pi_sel[static_cast<std::size_t>(k) * N + n] =
            std::exp(opt_logp[static_cast<std::size_t>(n) * m.num_actions + traj.actions[k]]);
      }
    }
    typename nn::Net<T>::Trace tr;
    const int psi_ids[] = {m.psi_head()};
    m.policy.forward(obs.data(), 1, psi_ids, tr);
    for (int n = 0; n < N; ++n) {
      psi[static_cast<std::size_t>(k) * N + n] =
          psi_from_logit(static_cast<double>(tr.head_row(m.psi_head(), 0)[n])).psi;
    }
  }

  // Termination decisions happen on entering s_1..s_{K-1}; a decision at s_K
  // cancels when the final option is marginalized.
  double total = 0;
  const int patterns = 1 << (K - 1);
  for (int b = 0; b < patterns; ++b) {
    double prob = 1.0;
    int block_start = 0;
    for (int boundary = 1; boundary <= K; ++boundary) {
      bool cut = boundary == K || ((b >> (boundary - 1)) & 1) != 0;
      if (!cut) continue;
      // block covers actions [block_start, boundary)
      double block_sum = 0;
      for (int n = 0; n < N; ++n) {
        double p = rho[static_cast<std::size_t>(block_start) * N + n];
        for (int k = block_start; k < boundary; ++k) {
          p *= pi_sel[static_cast<std::size_t>(k) * N + n];
          if (k > block_start) {
            // option survived entering s_k
            p *= 1.0 - psi[static_cast<std::size_t>(k) * N + n];
          }
        }
        if (boundary < K) p *= psi[static_cast<std::size_t>(boundary) * N + n];
        block_sum += p;
      }
      prob *= block_sum;
      block_start = boundary;
    }
    total += prob;
  }
  return std::log(total);
}

template <typename T>
double termination_loss(const nn::Model<T>& m,
                        std::span<const TrajectoryData<T>> batch, std::type_identity_t<T>* grad) {
  require(!batch.empty(), "termination_loss: empty batch");
  const int N = m.num_options;
  const double c = -1.0 / static_cast<double>(batch.size());
  std::vector<int> head_ids = m.policy_head_ids(true);

  double total = 0;
  typename nn::Net<T>::Trace tr;
  std::vector<std::vector<T>> dhead;
  std::vector<double> g_lrho, g_lpi, g_lpsi, g_l1mpsi, gf, gu;
  std::vector<double> p;

  for (const auto& traj : batch) {
    Terms<T> t = gather_terms(m, traj, tr, nullptr);
    RecursionRecord rec;
    double result = run_recursion(t, &rec, nullptr);
    total += -result / static_cast<double>(batch.size());
    if (grad == nullptr) continue;

    const int K = t.K;
    const int S = K + 1;
    g_lrho.assign(static_cast<std::size_t>(S) * N, 0.0);
    g_lpi.assign(static_cast<std::size_t>(K) * N, 0.0);
    g_lpsi.assign(static_cast<std::size_t>(S) * N, 0.0);
    g_l1mpsi.assign(static_cast<std::size_t>(S) * N, 0.0);
    gf.assign(N, 0.0);
    gu.assign(N, 0.0);

    for (int n = 0; n < N; ++n) {
      gf[n] = c * std::exp(rec.f[static_cast<std::size_t>(K) * N + n] - result);
    }
    for (int k = K - 1; k >= 0; --k) {
      const double* fk1 = rec.f.data() + static_cast<std::size_t>(k + 1) * N;
      const double* uk = rec.u.data() + static_cast<std::size_t>(k) * N;
      const double* tk = rec.tt.data() + static_cast<std::size_t>(k) * N;
      double g_big_t = 0;
      std::fill(gu.begin(), gu.end(), 0.0);
      for (int n = 0; n < N; ++n) {
        double x1 = rec.big_t[k] + t.lrho[static_cast<std::size_t>(k + 1) * N + n];
        double x2 = uk[n] + t.psi[static_cast<std::size_t>(k + 1) * N + n].log_1m_psi;
        double w1 = std::exp(x1 - fk1[n]);
        double w2 = std::exp(x2 - fk1[n]);
        double gx1 = gf[n] * w1;
        double gx2 = gf[n] * w2;
        g_big_t += gx1;
        g_lrho[static_cast<std::size_t>(k + 1) * N + n] += gx1;
        gu[n] += gx2;
        g_l1mpsi[static_cast<std::size_t>(k + 1) * N + n] += gx2;
      }
      for (int n = 0; n < N; ++n) {
        double gt = g_big_t * std::exp(tk[n] - rec.big_t[k]);
        gu[n] += gt;
        g_lpsi[static_cast<std::size_t>(k + 1) * N + n] += gt;
      }
      for (int n = 0; n < N; ++n) {
        gf[n] = gu[n];
        g_lpi[static_cast<std::size_t>(k) * N + n] += gu[n];
      }
    }
    for (int n = 0; n < N; ++n) g_lrho[n] += gf[n];

    // Map log-space gradients onto head logits.
    dhead.assign(m.policy.num_heads(), {});
    const int A = m.num_actions;
    for (int n = 0; n < N; ++n) dhead[n].assign(static_cast<std::size_t>(S) * A, T(0));
    dhead[m.rho_head()].assign(static_cast<std::size_t>(S) * N, T(0));
    dhead[m.psi_head()].assign(static_cast<std::size_t>(S) * N, T(0));
    p.resize(std::max(A, N));

    for (int k = 0; k < S; ++k) {
      auto rho_logits = tr.head_row(m.rho_head(), k);
      softmax(rho_logits, std::span<double>(p.data(), N));
      double gsum = 0;
      for (int n = 0; n < N; ++n) gsum += g_lrho[static_cast<std::size_t>(k) * N + n];
      T* drow = dhead[m.rho_head()].data() + static_cast<std::size_t>(k) * N;
      for (int n = 0; n < N; ++n) {
        drow[n] = static_cast<T>(g_lrho[static_cast<std::size_t>(k) * N + n] - p[n] * gsum);
      }
    }
    for (int k = 0; k < K; ++k) {
      const int sel = traj.actions[k];
      for (int n = 0; n < N; ++n) {
        double g = g_lpi[static_cast<std::size_t>(k) * N + n];
        if (g == 0) continue;
        auto logits = tr.head_row(n, k);
        softmax(logits, std::span<double>(p.data(), A));
        T* drow = dhead[n].data() + static_cast<std::size_t>(k) * A;
        for (int a = 0; a < A; ++a) {
          drow[a] += static_cast<T>(g * ((a == sel ? 1.0 : 0.0) - p[a]));
        }
      }
    }
    for (int k = 1; k < S; ++k) {
      T* drow = dhead[m.psi_head()].data() + static_cast<std::size_t>(k) * N;
      for (int n = 0; n < N; ++n) {
        const PsiTerms& pt = t.psi[static_cast<std::size_t>(k) * N + n];
        drow[n] = static_cast<T>(g_lpsi[static_cast<std::size_t>(k) * N + n] * pt.dlogpsi_dz +
                                 g_l1mpsi[static_cast<std::size_t>(k) * N + n] * pt.dlog1mpsi_dz);
      }
    }
    m.policy.backward(traj.obs.data(), S, tr, head_ids, dhead, grad);
  }
  return total;
}

void write_trajectories(const std::vector<TrajectoryData<float>>& trajs, int obs_dim,
                        const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  require(os.good(), "write_trajectories: cannot open " + path);
  auto put_u32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  auto put_i32 = [&](std::int32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
  put_u32(0x4a52544fu);  // "OTRJ"
  put_u32(1);
  put_u32(static_cast<std::uint32_t>(trajs.size()));
  for (const auto& tr : trajs) {
    put_u32(static_cast<std::uint32_t>(tr.len));
    for (int k = 0; k < tr.len; ++k) {
      put_u32(static_cast<std::uint32_t>(obs_dim));
      for (int d = 0; d < obs_dim; ++d) {
        char bit = tr.obs[static_cast<std::size_t>(k) * obs_dim + d] > 0.5f ? 1 : 0;
        os.write(&bit, 1);
      }
      put_i32(k < tr.len - 1 ? tr.actions[k] : -1);
    }
  }
  require(os.good(), "write_trajectories: write failed");
}

std::vector<TrajectoryData<float>> read_trajectories(const std::string& path, int* obs_dim_out) {
  std::ifstream is(path, std::ios::binary);
  require(is.good(), "read_trajectories: cannot open " + path);
  auto get_u32 = [&] {
    std::uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  auto get_i32 = [&] {
    std::int32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), 4);
    return v;
  };
  require(get_u32() == 0x4a52544fu, "read_trajectories: bad magic");
  require(get_u32() == 1, "read_trajectories: unsupported version");
  std::uint32_t count = get_u32();
  std::vector<TrajectoryData<float>> trajs(count);
  int obs_dim = -1;
  for (auto& tr : trajs) {
    tr.len = static_cast<int>(get_u32());
    for (int k = 0; k < tr.len; ++k) {
      int dim = static_cast<int>(get_u32());
      require(obs_dim < 0 || dim == obs_dim, "read_trajectories: inconsistent obs dim");
      obs_dim = dim;
      for (int d = 0; d < dim; ++d) {
        char bit = 0;
        is.read(&bit, 1);
        tr.obs.push_back(bit != 0 ? 1.0f : 0.0f);
      }
      int action = get_i32();
      if (k < tr.len - 1) tr.actions.push_back(action);
    }
  }
  require(is.good(), "read_trajectories: truncated file");
  if (obs_dim_out != nullptr) *obs_dim_out = obs_dim;
  return trajs;
}

// Explicit instantiations for the two precisions in use.
template double trajectory_log_likelihood<float>(const nn::Model<float>&,
                                                 const TrajectoryData<float>&, PhiTable*,
                                                 OpCounter*);
template double trajectory_log_likelihood<double>(const nn::Model<double>&,
                                                  const TrajectoryData<double>&, PhiTable*,
                                                  OpCounter*);
template double brute_force_log_likelihood<float>(const nn::Model<float>&,
                                                  const TrajectoryData<float>&);
template double brute_force_log_likelihood<double>(const nn::Model<double>&,
                                                   const TrajectoryData<double>&);
template double termination_loss<float>(const nn::Model<float>&,
                                        std::span<const TrajectoryData<float>>, float*);
template double termination_loss<double>(const nn::Model<double>&,
                                         std::span<const TrajectoryData<double>>, double*);

}  // namespace optit::term
