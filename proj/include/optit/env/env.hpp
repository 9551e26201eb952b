#pragma once
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "optit/util/require.hpp"
#include "optit/util/rng.hpp"

namespace optit::env {

struct MdpSpec {
  int num_actions = 0;
  int observation_dim = 0;
  double discount = 0.99;
};

// Opaque environment state: a small packed payload plus a terminal flag.
// Cloneable by copy, hashable and comparable for tests.
struct EnvState {
  std::vector<std::int32_t> w;
  bool terminal = false;
  bool operator==(const EnvState&) const = default;
};

struct EnvStateHash {
  std::size_t operator()(const EnvState& s) const {
    std::size_t h = s.terminal ? 0x9e3779b97f4a7c15ull : 0;
    for (std::int32_t v : s.w) {
      h ^= static_cast<std::size_t>(v) + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
  }
};

struct Transition {
  EnvState next;
  double reward = 0;
  bool terminal = false;
};

// Generative-model contract. Instances are immutable configuration; states are
// cloned freely, so concurrent rollouts from cloned states are safe.
class Environment {
 public:
  virtual ~Environment() = default;
  virtual const MdpSpec& spec() const = 0;
  virtual EnvState reset(Rng& rng) const = 0;
  virtual Transition step(const EnvState& s, int action, Rng& rng) const = 0;
  virtual void encode(const EnvState& s, float* out) const = 0;

  std::vector<float> observe(const EnvState& s) const {
    std::vector<float> obs(spec().observation_dim);
    encode(s, obs.data());
    return obs;
  }

 protected:
  void check_step_args(const EnvState& s, int action) const {
    require_state(!s.terminal, "step: state is terminal");
    require(action >= 0 && action < spec().num_actions, "step: action out of range");
  }
};

enum class EpisodeEnd { terminal, timeout };

struct EpisodeStep {
  EnvState state;
  std::vector<float> obs;
  int action = 0;
  double reward = 0;
};

struct EpisodeRecord {
  std::vector<EpisodeStep> steps;
  double undiscounted_return = 0;
  EpisodeEnd ended_by = EpisodeEnd::terminal;
};

using ActionSource = std::function<int(const Environment&, const EnvState&,
                                       const std::vector<float>& obs, Rng&)>;

// Runs one episode until terminal or exactly `timeout` steps. Timeouts apply
// to environment interaction only, never to search rollouts.
EpisodeRecord run_episode(const Environment& env, const ActionSource& source,
                          int timeout, Rng& rng);

// Grid movement shared by all gridworlds: 0=up, 1=down, 2=left, 3=right.
inline constexpr int kUp = 0, kDown = 1, kLeft = 2, kRight = 3;
inline constexpr int kDx[4] = {0, 0, -1, 1};
inline constexpr int kDy[4] = {-1, 1, 0, 0};

}  // namespace optit::env
