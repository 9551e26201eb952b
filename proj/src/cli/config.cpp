#include "optit/cli/config.hpp"

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace optit::cli {

ExperimentConfig default_config(env::EnvKind kind, learn::LossVariant loss) {
  ExperimentConfig c;
  c.env.kind = kind;
  c.env.discount = 0.99;
  c.train.loss = loss;
  const bool is_exit = loss == learn::LossVariant::exit_sampled_seq ||
                       loss == learn::LossVariant::exit_sampled_indep ||
                       loss == learn::LossVariant::exit_exact_indep;
  switch (kind) {
    case env::EnvKind::compass:
      c.env.width = 15;
      c.env.timeout = 20;
      c.search.simulation_budget = 50;
      c.search.rollout_length = 20;
      c.search.beta = 0.01;
      c.train.options = is_exit ? 1 : 4;
      c.train.total_env_steps = 200000;
      break;
    case env::EnvKind::procmaze:
    case env::EnvKind::electric_procmaze:
      c.env.width = 7;
      c.env.timeout = 120;
      c.search.simulation_budget = 1000;
      c.search.rollout_length = 5;
      c.search.beta = 0.1;
      c.train.options = is_exit ? 1 : 5;
      c.train.total_env_steps = 500000;
      break;
    case env::EnvKind::hier_electric_procmaze:
      c.env.width = 5;
      c.env.timeout = 960;  // 120 base-environment steps, 8 controller steps each
      c.env.controller_width = 8;
      c.search.simulation_budget = 1000;
      c.search.rollout_length = 8;
      c.search.beta = is_exit ? 0.1 : 0.01;
      c.train.options = is_exit ? 1 : 5;
      c.net.hidden_units = 800;
      c.train.total_env_steps = 2000000;
      break;
  }
  c.search.variance_decay = 0.99;
  c.search.discount = 0.99;
  return c;
}

namespace {

using Section = std::map<std::string, std::string>;
using Sections = std::map<std::string, Section>;

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

Sections tokenize(const std::string& text) {
  Sections out;
  std::istringstream is(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      require(line.back() == ']', "config line " + std::to_string(lineno) + ": bad section header");
      section = trim(line.substr(1, line.size() - 2));
      out[section];
      continue;
    }
    std::size_t eq = line.find('=');
    require(eq != std::string::npos, "config line " + std::to_string(lineno) + ": expected key = value");
    require(!section.empty(), "config line " + std::to_string(lineno) + ": key outside any section");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    require(!key.empty() && !value.empty(),
            "config line " + std::to_string(lineno) + ": empty key or value");
    require(out[section].find(key) == out[section].end(),
            "config: duplicate key " + section + "." + key);
    out[section][key] = value;
  }
  return out;
}

int to_int(const std::string& s) {
  std::size_t pos = 0;
  int v = std::stoi(s, &pos);
  require(pos == s.size(), "config: bad integer '" + s + "'");
  return v;
}
std::int64_t to_i64(const std::string& s) {
  std::size_t pos = 0;
  long long v = std::stoll(s, &pos);
  require(pos == s.size(), "config: bad integer '" + s + "'");
  return v;
}
double to_real(const std::string& s) {
  std::size_t pos = 0;
  double v = std::stod(s, &pos);
  require(pos == s.size(), "config: bad real '" + s + "'");
  return v;
}
template <typename F>
auto to_list(const std::string& s, F&& f) {
  std::vector<decltype(f(std::string()))> out;
  std::istringstream is(s);
  std::string tok;
  while (is >> tok) out.push_back(f(tok));
  require(!out.empty(), "config: empty list");
  return out;
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  Sections sec = tokenize(text);

  // Environment kind and loss variant steer the defaults, so read them first.
  env::EnvKind kind = env::EnvKind::compass;
  if (sec.count("env") && sec["env"].count("kind")) {
    kind = env::env_kind_from_string(sec["env"]["kind"]);
  }
  learn::LossVariant loss = learn::LossVariant::optit;
  if (sec.count("train") && sec["train"].count("loss")) {
    loss = learn::loss_variant_from_string(sec["train"]["loss"]);
  }
  ExperimentConfig cfg = default_config(kind, loss);

  for (auto& [name, kv] : sec) {
    auto take = [&](const std::string& key) -> const std::string* {
      auto it = kv.find(key);
      return it == kv.end() ? nullptr : &it->second;
    };
    auto leftover_check = [&](std::initializer_list<const char*> known) {
      for (auto& [key, _] : kv) {
        bool ok = false;
        for (const char* k : known) ok = ok || key == k;
        require(ok, "config: unknown key " + name + "." + key);
      }
    };
    if (name == "env") {
      leftover_check({"kind", "width", "timeout", "controller_width", "wall_penalty", "discount"});
      if (auto* v = take("width")) cfg.env.width = to_int(*v);
      if (auto* v = take("timeout")) cfg.env.timeout = to_int(*v);
      if (auto* v = take("controller_width")) cfg.env.controller_width = to_int(*v);
      if (auto* v = take("wall_penalty")) cfg.env.wall_penalty = to_real(*v);
      if (auto* v = take("discount")) {
        cfg.env.discount = to_real(*v);
        cfg.search.discount = cfg.env.discount;
      }
    } else if (name == "search") {
      leftover_check({"simulation_budget", "rollout_length", "beta", "variance_decay"});
      if (auto* v = take("simulation_budget")) cfg.search.simulation_budget = to_int(*v);
      if (auto* v = take("rollout_length")) cfg.search.rollout_length = to_int(*v);
      if (auto* v = take("beta")) cfg.search.beta = to_real(*v);
      if (auto* v = take("variance_decay")) cfg.search.variance_decay = to_real(*v);
    } else if (name == "net") {
      leftover_check({"hidden_layers", "hidden_units"});
      if (auto* v = take("hidden_layers")) cfg.net.hidden_layers = to_int(*v);
      if (auto* v = take("hidden_units")) cfg.net.hidden_units = to_int(*v);
    } else if (name == "train") {
      leftover_check({"options", "loss", "batch_size", "buffer_capacity",
                      "grad_updates_per_env_step", "workers", "training_start", "alpha",
                      "total_env_steps", "metrics_every", "window_episodes"});
      if (auto* v = take("options")) cfg.train.options = to_int(*v);
      if (auto* v = take("batch_size")) cfg.train.batch_size = to_int(*v);
      if (auto* v = take("buffer_capacity")) cfg.train.buffer_capacity = to_int(*v);
      if (auto* v = take("grad_updates_per_env_step"))
        cfg.train.grad_updates_per_env_step = to_int(*v);
      if (auto* v = take("workers")) cfg.train.workers = to_int(*v);
      if (auto* v = take("training_start")) cfg.train.training_start = to_i64(*v);
      if (auto* v = take("alpha")) cfg.train.alpha = to_real(*v);
      if (auto* v = take("total_env_steps")) cfg.train.total_env_steps = to_i64(*v);
      if (auto* v = take("metrics_every")) cfg.train.metrics_every = to_int(*v);
      if (auto* v = take("window_episodes")) cfg.train.window_episodes = to_int(*v);
    } else if (name == "run") {
      leftover_check({"seeds"});
      if (auto* v = take("seeds")) {
        cfg.seeds = to_list(*v, [](const std::string& s) {
          return static_cast<std::uint64_t>(to_i64(s));
        });
      }
    } else if (name == "sweep") {
      leftover_check({"alpha", "beta"});
      if (auto* v = take("alpha")) cfg.sweep.alpha = to_list(*v, to_real);
      if (auto* v = take("beta")) cfg.sweep.beta = to_list(*v, to_real);
    } else {
      require(false, "config: unknown section [" + name + "]");
    }
  }
  validate_config(cfg);
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream is(path);
  require(is.good(), "cannot open config file " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_config(ss.str());
}

namespace {
std::string fmt_real(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}
}  // namespace

std::string serialize_config(const ExperimentConfig& cfg) {
  std::ostringstream os;
  os << "[env]\n";
  os << "kind = " << env::to_string(cfg.env.kind) << "\n";
  os << "width = " << cfg.env.width << "\n";
  os << "timeout = " << cfg.env.timeout << "\n";
  os << "controller_width = " << cfg.env.controller_width << "\n";
  os << "wall_penalty = " << fmt_real(cfg.env.wall_penalty) << "\n";
  os << "discount = " << fmt_real(cfg.env.discount) << "\n";
  os << "\n[search]\n";
  os << "simulation_budget = " << cfg.search.simulation_budget << "\n";
  os << "rollout_length = " << cfg.search.rollout_length << "\n";
  os << "beta = " << fmt_real(cfg.search.beta) << "\n";
  os << "variance_decay = " << fmt_real(cfg.search.variance_decay) << "\n";
  os << "\n[net]\n";
  os << "hidden_layers = " << cfg.net.hidden_layers << "\n";
  os << "hidden_units = " << cfg.net.hidden_units << "\n";
  os << "\n[train]\n";
  os << "options = " << cfg.train.options << "\n";
  os << "loss = " << learn::to_string(cfg.train.loss) << "\n";
  os << "batch_size = " << cfg.train.batch_size << "\n";
  os << "buffer_capacity = " << cfg.train.buffer_capacity << "\n";
  os << "grad_updates_per_env_step = " << cfg.train.grad_updates_per_env_step << "\n";
  os << "workers = " << cfg.train.workers << "\n";
  os << "training_start = " << cfg.train.training_start << "\n";
  os << "alpha = " << fmt_real(cfg.train.alpha) << "\n";
  os << "total_env_steps = " << cfg.train.total_env_steps << "\n";
  os << "metrics_every = " << cfg.train.metrics_every << "\n";
  os << "window_episodes = " << cfg.train.window_episodes << "\n";
  os << "\n[run]\n";
  os << "seeds =";
  for (auto s : cfg.seeds) os << " " << s;
  os << "\n";
  if (!cfg.sweep.alpha.empty() || !cfg.sweep.beta.empty()) {
    os << "\n[sweep]\n";
    if (!cfg.sweep.alpha.empty()) {
      os << "alpha =";
      for (double a : cfg.sweep.alpha) os << " " << fmt_real(a);
      os << "\n";
    }
    if (!cfg.sweep.beta.empty()) {
      os << "beta =";
      for (double b : cfg.sweep.beta) os << " " << fmt_real(b);
      os << "\n";
    }
  }
  return os.str();
}

void validate_config(const ExperimentConfig& cfg) {
  const auto& t = cfg.train;
  const auto& s = cfg.search;
  require(cfg.env.width >= 3, "config: width must be >= 3");
  if (cfg.env.kind != env::EnvKind::compass) {
    require(cfg.env.width % 2 == 1, "config: maze width must be odd");
  }
  require(cfg.env.timeout >= 1, "config: timeout must be >= 1");
  require(cfg.env.discount >= 0 && cfg.env.discount <= 1, "config: discount outside [0,1]");
  require(t.options >= 1, "config: options must be >= 1");
  require(s.rollout_length >= 1, "config: rollout_length must be >= 1");
  require(s.beta > 0, "config: beta must be positive");
  require(s.variance_decay >= 0 && s.variance_decay < 1,
          "config: variance_decay outside [0,1)");
  require(s.simulation_budget >= 4 * t.options,
          "config: simulation budget below one rollout per (action, option) pair");
  const bool is_exit = t.loss == learn::LossVariant::exit_sampled_seq ||
                       t.loss == learn::LossVariant::exit_sampled_indep ||
                       t.loss == learn::LossVariant::exit_exact_indep;
  require(!is_exit || t.options == 1, "config: exit loss variants require options = 1");
  require(t.batch_size >= 1 && t.buffer_capacity >= 1, "config: batch/buffer must be positive");
  require(t.grad_updates_per_env_step >= 0, "config: grad_updates_per_env_step must be >= 0");
  require(t.workers >= 1, "config: workers must be >= 1");
  require(t.total_env_steps >= 1, "config: total_env_steps must be >= 1");
  require(t.metrics_every >= 1 && t.window_episodes >= 1,
          "config: metrics_every/window_episodes must be positive");
  require(t.alpha > 0, "config: alpha must be positive");
  require(cfg.net.hidden_layers >= 1 && cfg.net.hidden_units >= 1,
          "config: net sizes must be positive");
  require(!cfg.seeds.empty(), "config: at least one seed required");
}

}  // namespace optit::cli
