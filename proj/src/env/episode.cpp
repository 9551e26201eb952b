#include "optit/env/env.hpp"

namespace optit::env {

EpisodeRecord run_episode(const Environment& env, const ActionSource& source,
                          int timeout, Rng& rng) {
  require(timeout >= 1, "run_episode: timeout must be >= 1");
  EpisodeRecord rec;
  EnvState state = env.reset(rng);
  for (int t = 0; t < timeout; ++t) {
    std::vector<float> obs = env.observe(state);
    int action = source(env, state, obs, rng);
    Transition tr = env.step(state, action, rng);
    rec.steps.push_back({state, std::move(obs), action, tr.reward});
    rec.undiscounted_return += tr.reward;
    if (tr.terminal) {
      rec.ended_by = EpisodeEnd::terminal;
      return rec;
    }
    state = std::move(tr.next);
  }
  rec.ended_by = EpisodeEnd::timeout;
  return rec;
}

}  // namespace optit::env
