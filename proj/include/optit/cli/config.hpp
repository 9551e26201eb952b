#pragma once
#include <cstdint>
#include <string>
#include <vector>

#include "optit/env/registry.hpp"
#include "optit/learn/losses.hpp"

namespace optit::cli {

struct SearchBlock {
  int simulation_budget = 0;
  int rollout_length = 1;  // K, also the option rollout horizon
  double beta = 0.1;
  double variance_decay = 0.99;
  double discount = 0.99;

  bool operator==(const SearchBlock&) const = default;
};

struct NetBlock {
  int hidden_layers = 3;
  int hidden_units = 400;

  bool operator==(const NetBlock&) const = default;
};

struct TrainBlock {
  int options = 1;  // N
  learn::LossVariant loss = learn::LossVariant::optit;
  int batch_size = 250;
  int buffer_capacity = 100000;
  int grad_updates_per_env_step = 16;
  int workers = 16;
  std::int64_t training_start = 100;
  double alpha = 1.25e-4;  // policy step size; value uses 2*alpha
  std::int64_t total_env_steps = 500000;
  int metrics_every = 1000;
  int window_episodes = 100;

  bool operator==(const TrainBlock&) const = default;
};

struct SweepBlock {
  std::vector<double> alpha;
  std::vector<double> beta;

  bool operator==(const SweepBlock&) const = default;
};

struct ExperimentConfig {
  env::EnvConfig env;
  SearchBlock search;
  NetBlock net;
  TrainBlock train;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  SweepBlock sweep;

  bool operator==(const ExperimentConfig&) const = default;
};

// Hyperparameter defaults per environment kind; keys present in the parsed
// text override them.
ExperimentConfig default_config(env::EnvKind kind, learn::LossVariant loss);

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& cfg);

// Fail-fast consistency checks; throws with a message on the first violation.
void validate_config(const ExperimentConfig& cfg);

}  // namespace optit::cli
