#pragma once
#include <cstdint>
#include <string>
#include <type_traits>
#include <vector>

#include "optit/nn/model.hpp"

namespace optit::term {

// A trajectory (s_0, a_0, ..., s_K): len = K+1 states, len-1 actions.
template <typename T>
struct TrajectoryData {
  int len = 0;
  std::vector<T> obs;       // len x obs_dim
  std::vector<int> actions; // len - 1
};

// Debug-build style operation counter for the O(K*N) complexity check.
struct OpCounter {
  std::int64_t recursion_cells = 0;  // one per phi_{k+1}(n) computed
  std::int64_t head_rows = 0;        // (state, head) evaluations fed to the recursion
};

// Log phi table, (K+1) x N rows of log phi~_k(n).
struct PhiTable {
  int num_options = 0;
  std::vector<double> log_phi;
  double at(int k, int n) const { return log_phi[static_cast<std::size_t>(k) * num_options + n]; }
};

// Theta-dependent part of log P(s_0, a_0, ..., s_K) under the joint model of
// rho, option policies and option-indexed termination functions, computed by
// the forward recursion entirely in log space.
template <typename T>
double trajectory_log_likelihood(const nn::Model<T>& m, const TrajectoryData<T>& traj,
                                 PhiTable* table = nullptr, OpCounter* counter = nullptr);

// Independent oracle: enumerates every termination pattern over {0,1}^{K-1}
// and every per-block option assignment, summing exact probabilities.
// Bounds: K <= 8, N <= 4.
template <typename T>
double brute_force_log_likelihood(const nn::Model<T>& m, const TrajectoryData<T>& traj);

// Mean negative log-likelihood over the batch; gradients (into `grad`, policy
// net param count) reach rho, every option head and every psi head through the
// unrolled recursion.
template <typename T>
double termination_loss(const nn::Model<T>& m,
                        std::span<const TrajectoryData<T>> batch, std::type_identity_t<T>* grad);

// Clamped sigmoid terms shared by the recursion, its backward pass and the
// brute-force oracle. Derivatives are zero where the clamp engages.
struct PsiTerms {
  double psi = 0;        // clamped to [1e-6, 1-1e-6]
  double log_psi = 0;
  double log_1m_psi = 0;
  double dlogpsi_dz = 0;
  double dlog1mpsi_dz = 0;
};
PsiTerms psi_from_logit(double z);

// Offline trajectory dump: little-endian, each record length-prefixed.
void write_trajectories(const std::vector<TrajectoryData<float>>& trajs, int obs_dim,
                        const std::string& path);
std::vector<TrajectoryData<float>> read_trajectories(const std::string& path, int* obs_dim);

}  // namespace optit::term
