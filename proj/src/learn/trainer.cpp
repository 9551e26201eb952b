#include "optit/learn/trainer.hpp"

#include <atomic>
#include <chrono>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <thread>

#include "optit/cli/manifest.hpp"
#include "optit/cli/metrics.hpp"
#include "optit/learn/losses.hpp"
#include "optit/learn/replay.hpp"
#include "optit/nn/adamw.hpp"
#include "optit/nn/checkpoint.hpp"
#include "optit/search/mcs.hpp"

namespace optit::learn {

namespace {

using Clock = std::chrono::steady_clock;

struct Shared {
  const cli::ExperimentConfig& cfg;
  ReplayBuffer buffer;
  std::deque<double> window;
  search::RunningVariance rv;
  std::int64_t total_steps = 0;
  std::int64_t total_episodes = 0;
  double loss_policy_sum = 0;
  std::int64_t loss_policy_n = 0;
  double loss_value_sum = 0;
  std::int64_t loss_value_n = 0;

  explicit Shared(const cli::ExperimentConfig& c)
      : cfg(c), buffer(c.train.buffer_capacity) {
    rv.decay = c.search.variance_decay;
  }

  void push_episode_return(double ret) {
    window.push_back(ret);
    while (static_cast<int>(window.size()) > cfg.train.window_episodes) window.pop_front();
    ++total_episodes;
  }

  MeanCi window_stats() const {
    std::vector<double> xs(window.begin(), window.end());
    return mean_ci95(xs);
  }
};

// Per-worker actor state. One environment instance per worker; per-episode rng
// streams are derived from (seed, worker, episode) so any schedule replays the
// same episodes.
struct Worker {
  int id = 0;
  std::unique_ptr<env::Environment> env;
  Rng base;
  std::int64_t episode_counter = -1;
  Rng episode_rng;
  env::EnvState state;
  int steps_in_episode = 0;
  double episode_return = 0;
  std::int64_t episode_id = 0;
  std::uint32_t prev_slot = BufferEntry::kNoSlot;
  bool need_reset = true;

  void begin_episode(int workers) {
    ++episode_counter;
    episode_rng = base.stream(static_cast<std::uint64_t>(episode_counter));
    Rng reset_rng = episode_rng.stream(0);
    state = env->reset(reset_rng);
    steps_in_episode = 0;
    episode_return = 0;
    episode_id = episode_counter * workers + id;
    prev_slot = BufferEntry::kNoSlot;
    need_reset = false;
  }
};

struct StepOutcome {
  double episode_return = 0;
  bool episode_done = false;
};

// One environment step of one worker: search, store, execute.
StepOutcome worker_step(Worker& w, const nn::Model<float>& model, Shared& sh,
                        std::mutex* mu, ThreadPool* pool) {
  if (w.need_reset) w.begin_episode(sh.cfg.train.workers);

  search::SearchConfig scfg;
  scfg.simulation_budget = sh.cfg.search.simulation_budget;
  scfg.rollout_length = sh.cfg.search.rollout_length;
  scfg.beta = sh.cfg.search.beta;
  scfg.discount = sh.cfg.search.discount;

  Rng step_stream = w.episode_rng.stream(1 + static_cast<std::uint64_t>(w.steps_in_episode));
  Rng search_rng = step_stream.stream(0);
  Rng env_rng = step_stream.stream(1);

  search::RunningVariance rv_snapshot;
  {
    std::unique_lock<std::mutex> lk;
    if (mu != nullptr) lk = std::unique_lock<std::mutex>(*mu);
    rv_snapshot = sh.rv;
  }
  search::SearchResult res =
      search::mcs_with_options(*w.env, model, rv_snapshot, w.state, scfg, search_rng, pool);

  BufferEntry entry;
  entry.obs = w.env->observe(w.state);
  entry.pi_tilde = res.pi_tilde;
  entry.v_tilde = res.v_tilde;
  entry.episode_id = w.episode_id;
  entry.step_index = w.steps_in_episode;

  env::Transition tr = w.env->step(w.state, res.a_tilde, env_rng);
  w.episode_return += tr.reward;
  ++w.steps_in_episode;

  StepOutcome out;
  bool terminal = tr.terminal;
  bool timeout = !terminal && w.steps_in_episode >= sh.cfg.env.timeout;
  if (terminal) {
    entry.boundary = Boundary::terminal_next;
  } else if (timeout) {
    entry.boundary = Boundary::timeout_next;
  }

  {
    std::unique_lock<std::mutex> lk;
    if (mu != nullptr) lk = std::unique_lock<std::mutex>(*mu);
    std::uint32_t slot = sh.buffer.append(std::move(entry));
    sh.buffer.link(w.prev_slot, slot);
    w.prev_slot = slot;
    sh.rv.update(res.rollout_returns);
    if (terminal || timeout) sh.push_episode_return(w.episode_return);
  }

  if (terminal || timeout) {
    out.episode_done = true;
    out.episode_return = w.episode_return;
    w.need_reset = true;
  } else {
    w.state = std::move(tr.next);
  }
  return out;
}

struct Learner {
  nn::Model<float> model;
  nn::AdamW<float> opt_policy;
  nn::AdamW<float> opt_value;
  std::vector<float> grad_policy;
  std::vector<float> grad_value;
  Rng rng;
  std::int64_t updates = 0;

  Learner(const cli::ExperimentConfig& cfg, int obs_dim, Rng init_rng) {
    std::vector<int> hidden(cfg.net.hidden_layers, cfg.net.hidden_units);
    model = nn::Model<float>::make(obs_dim, hidden, cfg.train.options, 4, false);
    model.init_params(init_rng);
    nn::AdamConfig ac;
    opt_policy = nn::AdamW<float>(model.policy.param_count(), ac);
    opt_value = nn::AdamW<float>(model.value.param_count(), ac);
    grad_policy.assign(model.policy.param_count(), 0.0f);
    grad_value.assign(model.value.param_count(), 0.0f);
    rng = init_rng.stream(777);
  }

  // Samples under `mu` (when given), computes gradients outside the lock.
  // Returns false when the buffer is still empty.
  bool update(Shared& sh, std::mutex* mu, double* loss_p, double* loss_v) {
    const auto& cfg = sh.cfg;
    const int A = model.num_actions;
    const int obs_dim = model.obs_dim();
    const bool seq_loss = cfg.train.loss == LossVariant::optit ||
                          cfg.train.loss == LossVariant::exit_sampled_seq ||
                          cfg.train.loss == LossVariant::mean_ce;

    std::vector<SegmentData<float>> segs;
    EntryBatch<float> policy_batch;
    EntryBatch<float> value_batch;
    {
      std::unique_lock<std::mutex> lk;
      if (mu != nullptr) lk = std::unique_lock<std::mutex>(*mu);
      if (sh.buffer.size() == 0) return false;
      if (seq_loss) {
        segs.reserve(cfg.train.batch_size);
        for (int b = 0; b < cfg.train.batch_size; ++b) {
          std::vector<std::uint32_t> slots =
              sh.buffer.sample_segment(cfg.search.rollout_length, rng);
          SegmentData<float> seg;
          seg.len = static_cast<int>(slots.size());
          seg.obs.reserve(slots.size() * obs_dim);
          seg.pi.reserve(slots.size() * A);
          for (std::uint32_t s : slots) {
            const BufferEntry& e = sh.buffer.at(s);
            seg.obs.insert(seg.obs.end(), e.obs.begin(), e.obs.end());
            seg.pi.insert(seg.pi.end(), e.pi_tilde.begin(), e.pi_tilde.end());
          }
          segs.push_back(std::move(seg));
        }
      } else {
        policy_batch.batch = cfg.train.batch_size;
        for (int b = 0; b < cfg.train.batch_size; ++b) {
          const BufferEntry& e = sh.buffer.at(sh.buffer.sample_slot(rng));
          policy_batch.obs.insert(policy_batch.obs.end(), e.obs.begin(), e.obs.end());
          policy_batch.pi.insert(policy_batch.pi.end(), e.pi_tilde.begin(), e.pi_tilde.end());
        }
      }
      value_batch.batch = cfg.train.batch_size;
      for (int b = 0; b < cfg.train.batch_size; ++b) {
        const BufferEntry& e = sh.buffer.at(sh.buffer.sample_slot(rng));
        value_batch.obs.insert(value_batch.obs.end(), e.obs.begin(), e.obs.end());
        value_batch.v.push_back(e.v_tilde);
      }
    }

    std::fill(grad_policy.begin(), grad_policy.end(), 0.0f);
    double lp = 0;
    switch (cfg.train.loss) {
      case LossVariant::optit:
      case LossVariant::exit_sampled_seq:
        lp = optit_loss(model, std::span<const SegmentData<float>>(segs), rng,
                        grad_policy.data());
        break;
      case LossVariant::mean_ce:
        lp = mean_ce_loss(model, std::span<const SegmentData<float>>(segs), rng,
                          grad_policy.data());
        break;
      case LossVariant::exit_sampled_indep:
        lp = exit_indep_loss(model, policy_batch, false, rng, grad_policy.data());
        break;
      case LossVariant::exit_exact_indep:
        lp = exit_indep_loss(model, policy_batch, true, rng, grad_policy.data());
        break;
    }
    opt_policy.step(model.policy.params(), grad_policy, cfg.train.alpha);

    std::fill(grad_value.begin(), grad_value.end(), 0.0f);
    double lv = value_loss(model, value_batch, grad_value.data());
    opt_value.step(model.value.params(), grad_value, 2.0 * cfg.train.alpha);

    ++updates;
    *loss_p = lp;
    *loss_v = lv;
    return true;
  }
};

void emit_metrics_row(cli::MetricsWriter& writer, Shared& sh) {
  MeanCi wc = sh.window_stats();
  cli::MetricsRow row;
  row.total_env_steps = sh.total_steps;
  row.windowed_return_mean = wc.mean;
  row.windowed_return_ci95 = wc.ci95;
  row.loss_policy = sh.loss_policy_n > 0 ? sh.loss_policy_sum / sh.loss_policy_n : 0.0;
  row.loss_value = sh.loss_value_n > 0 ? sh.loss_value_sum / sh.loss_value_n : 0.0;
  row.sigma_bar = sh.rv.sigma_bar();
  writer.add_row(row);
  sh.loss_policy_sum = sh.loss_value_sum = 0;
  sh.loss_policy_n = sh.loss_value_n = 0;
}

}  // namespace

TrainOutput run_training(const cli::ExperimentConfig& cfg, std::uint64_t seed,
                         const std::string& out_dir, ThreadPool* pool,
                         bool synchronous) {
  cli::validate_config(cfg);
  std::filesystem::create_directories(out_dir);
  const std::string tag = "seed" + std::to_string(seed);
  const std::string manifest_name = "manifest_" + tag + ".json";

  TrainOutput out;
  out.metrics_path = out_dir + "/metrics_" + tag + ".csv";
  out.checkpoint_path = out_dir + "/checkpoint_" + tag + ".bin";
  out.manifest_path = out_dir + "/" + manifest_name;

  Rng root(seed);
  Shared sh(cfg);
  cli::MetricsWriter writer(out.metrics_path, manifest_name);

  std::vector<Worker> workers(cfg.train.workers);
  for (int w = 0; w < cfg.train.workers; ++w) {
    workers[w].id = w;
    workers[w].env = env::make_environment(cfg.env);
    workers[w].base = root.stream(100 + w);
  }
  const int obs_dim = workers[0].env->spec().observation_dim;
  Learner learner(cfg, obs_dim, root.stream(1));

  auto t0 = Clock::now();

  if (synchronous) {
    std::int64_t next_metrics = cfg.train.metrics_every;
    while (sh.total_steps < cfg.train.total_env_steps) {
      for (int w = 0; w < cfg.train.workers && sh.total_steps < cfg.train.total_env_steps;
           ++w) {
        worker_step(workers[w], learner.model, sh, nullptr, pool);
        ++sh.total_steps;
        if (sh.total_steps > cfg.train.training_start) {
          for (int u = 0; u < cfg.train.grad_updates_per_env_step; ++u) {
            double lp = 0, lv = 0;
            if (learner.update(sh, nullptr, &lp, &lv)) {
              sh.loss_policy_sum += lp;
              ++sh.loss_policy_n;
              sh.loss_value_sum += lv;
              ++sh.loss_value_n;
            }
          }
        }
        if (sh.total_steps >= next_metrics) {
          emit_metrics_row(writer, sh);
          next_metrics += cfg.train.metrics_every;
        }
      }
    }
  } else {
    // Asynchronous actor/learner: workers run on their own threads against
    // read-only parameter snapshots picked up at episode boundaries; the
    // learner publishes a fresh snapshot after each round of updates.
    struct Snapshot {
      std::vector<float> policy, value;
      std::uint64_t version = 0;
    };
    std::mutex mu;
    std::mutex snap_mu;
    auto make_snapshot = [&](std::uint64_t version) {
      auto s = std::make_shared<Snapshot>();
      s->policy.assign(learner.model.policy.params().begin(),
                       learner.model.policy.params().end());
      s->value.assign(learner.model.value.params().begin(),
                      learner.model.value.params().end());
      s->version = version;
      return std::shared_ptr<const Snapshot>(std::move(s));
    };
    std::shared_ptr<const Snapshot> snapshot = make_snapshot(1);

    std::atomic<std::int64_t> step_claims{0};
    std::vector<std::thread> threads;
    threads.reserve(workers.size());
    for (auto& w : workers) {
      threads.emplace_back([&, worker = &w] {
        nn::Model<float> model = learner.model;  // topology + initial params
        std::uint64_t have_version = 0;
        for (;;) {
          std::int64_t claim = step_claims.fetch_add(1, std::memory_order_relaxed);
          if (claim >= cfg.train.total_env_steps) return;
          if (worker->need_reset) {
            std::shared_ptr<const Snapshot> s;
            {
              std::unique_lock<std::mutex> lk(snap_mu);
              s = snapshot;
            }
            if (s->version != have_version) {
              std::copy(s->policy.begin(), s->policy.end(),
                        model.policy.params().begin());
              std::copy(s->value.begin(), s->value.end(), model.value.params().begin());
              have_version = s->version;
            }
          }
          worker_step(*worker, model, sh, &mu, nullptr);
          std::unique_lock<std::mutex> lk(mu);
          ++sh.total_steps;
        }
      });
    }
    // Learner paces itself against the collected steps and emits metrics rows
    // at every metrics_every boundary.
    std::int64_t next_metrics = cfg.train.metrics_every;
    std::int64_t done_updates = 0;
    std::uint64_t snap_version = 1;
    const std::int64_t publish_every = std::max(1, cfg.train.grad_updates_per_env_step);
    for (;;) {
      std::int64_t steps_now;
      {
        std::unique_lock<std::mutex> lk(mu);
        steps_now = sh.total_steps;
        while (next_metrics <= steps_now) {
          emit_metrics_row(writer, sh);
          next_metrics += cfg.train.metrics_every;
        }
      }
      std::int64_t owed =
          steps_now > cfg.train.training_start
              ? (steps_now - cfg.train.training_start) * cfg.train.grad_updates_per_env_step
              : 0;
      if (done_updates < owed) {
        double lp = 0, lv = 0;
        if (learner.update(sh, &mu, &lp, &lv)) {
          std::unique_lock<std::mutex> lk(mu);
          sh.loss_policy_sum += lp;
          ++sh.loss_policy_n;
          sh.loss_value_sum += lv;
          ++sh.loss_value_n;
        }
        ++done_updates;
        if (done_updates % publish_every == 0) {
          auto s = make_snapshot(++snap_version);
          std::unique_lock<std::mutex> lk(snap_mu);
          snapshot = std::move(s);
        }
        continue;
      }
      if (steps_now >= cfg.train.total_env_steps) break;
      std::this_thread::sleep_for(std::chrono::milliseconds(1));
    }
    for (auto& t : threads) t.join();
    std::unique_lock<std::mutex> lk(mu);
    while (next_metrics <= sh.total_steps) {
      emit_metrics_row(writer, sh);
      next_metrics += cfg.train.metrics_every;
    }
  }

  double wall_seconds =
      std::chrono::duration_cast<std::chrono::duration<double>>(Clock::now() - t0).count();

  out.final_windowed_return = sh.window_stats().mean;
  out.episodes = sh.total_episodes;
  out.env_steps = sh.total_steps;
  out.updates = learner.updates;

  nn::save_checkpoint(learner.model, manifest_name, out.checkpoint_path);
  cli::write_manifest(out.manifest_path, cfg, seed, wall_seconds, sh.total_steps,
                      sh.total_episodes, learner.updates,
                      {out.metrics_path, out.checkpoint_path});
  return out;
}

}  // namespace optit::learn
