#pragma once
#include <string>

#include "optit/cli/config.hpp"
#include "optit/util/threadpool.hpp"

namespace optit::learn {

struct TrainOutput {
  double final_windowed_return = 0;
  std::int64_t episodes = 0;
  std::int64_t env_steps = 0;
  std::int64_t updates = 0;
  std::string metrics_path;
  std::string checkpoint_path;
  std::string manifest_path;
};

// Full actor/learner loop for one seed: workers run episodes, searching in
// every encountered state and executing the greedy search action; the learner
// performs grad_updates_per_env_step gradient updates per environment step
// once training_start total steps have been collected. In synchronous mode
// workers and learner interleave on one schedule (deterministic; rollouts may
// still fan out over `pool`); otherwise each worker runs on its own thread and
// the learner paces itself against the shared step counter.
TrainOutput run_training(const cli::ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir, ThreadPool* pool,
                         bool synchronous);

}  // namespace optit::learn
