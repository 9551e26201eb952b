// Experiment orchestration CLI: run / sweep / plot / analyze / checkpoint-dump
// / selftest.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "optit/analysis/arrows.hpp"
#include "optit/analysis/ce_demo.hpp"
#include "optit/analysis/diversity.hpp"
#include "optit/analysis/tabular.hpp"
#include "optit/cli/config.hpp"
#include "optit/cli/manifest.hpp"
#include "optit/cli/plot.hpp"
#include "optit/learn/trainer.hpp"
#include "optit/nn/checkpoint.hpp"
#include "optit/search/mcs.hpp"
#include "optit/term/termination.hpp"

namespace {

using namespace optit;
using nlohmann::json;

int cmd_run(const std::string& config_path, const std::string& out_dir, int threads,
            bool synchronous, long long seed_override) {
  cli::ExperimentConfig cfg = cli::load_config(config_path);
  std::vector<std::uint64_t> seeds = cfg.seeds;
  if (seed_override >= 0) seeds = {static_cast<std::uint64_t>(seed_override)};
  ThreadPool pool(threads);
  for (std::uint64_t seed : seeds) {
    learn::TrainOutput out = learn::run_training(cfg, seed, out_dir, &pool, synchronous);
    std::printf("seed %llu: steps=%lld episodes=%lld updates=%lld windowed_return=%.4f\n",
                static_cast<unsigned long long>(seed),
                static_cast<long long>(out.env_steps), static_cast<long long>(out.episodes),
                static_cast<long long>(out.updates), out.final_windowed_return);
  }
  return 0;
}

// Appendix-style grid sweep over (alpha, beta); each cell runs every seed and
// the winner maximizes the average windowed return over the last 20% of steps.
int cmd_sweep(const std::string& config_path, const std::string& out_dir, int threads,
              bool synchronous) {
  cli::ExperimentConfig base = cli::load_config(config_path);
  std::vector<double> alphas = base.sweep.alpha;
  std::vector<double> betas = base.sweep.beta;
  if (alphas.empty()) alphas = {6.25e-5, 1.25e-4, 2.5e-4, 5e-4, 1e-3};
  if (betas.empty()) betas = {0.01, 0.1, 1.0};

  ThreadPool pool(threads);
  json summary = json::array();
  double best_score = -1e300;
  std::string best_cell;
  for (double alpha : alphas) {
    for (double beta : betas) {
      cli::ExperimentConfig cfg = base;
      cfg.train.alpha = alpha;
      cfg.search.beta = beta;
      char cell[64];
      std::snprintf(cell, sizeof cell, "alpha%g_beta%g", alpha, beta);
      std::string cell_dir = out_dir + "/" + cell;
      std::vector<double> scores;
      for (std::uint64_t seed : cfg.seeds) {
        learn::TrainOutput out = learn::run_training(cfg, seed, cell_dir, &pool, synchronous);
        cli::MetricsFile mf = cli::read_metrics(out.metrics_path);
        double tail_from = 0.8 * static_cast<double>(cfg.train.total_env_steps);
        double acc = 0;
        int n = 0;
        for (const auto& row : mf.rows) {
          if (row.total_env_steps >= tail_from && !std::isnan(row.windowed_return_mean)) {
            acc += row.windowed_return_mean;
            ++n;
          }
        }
        scores.push_back(n > 0 ? acc / n : -1e300);
      }
      double mean = 0;
      for (double s : scores) mean += s;
      mean /= static_cast<double>(scores.size());
      summary.push_back({{"alpha", alpha}, {"beta", beta}, {"score", mean},
                         {"per_seed", scores}});
      std::printf("sweep cell %s: score %.4f\n", cell, mean);
      if (mean > best_score) {
        best_score = mean;
        best_cell = cell;
      }
    }
  }
  json out = {{"cells", summary}, {"best", best_cell}, {"best_score", best_score}};
  std::filesystem::create_directories(out_dir);
  std::ofstream os(out_dir + "/sweep_summary.json");
  os << out.dump(2) << "\n";
  std::printf("best cell: %s (score %.4f)\n", best_cell.c_str(), best_score);
  return 0;
}

int cmd_plot(const std::vector<std::string>& series_specs, const std::string& out_svg,
             double floor, bool has_floor) {
  std::vector<cli::PlotSeries> series;
  for (const std::string& spec : series_specs) {
    std::size_t eq = spec.find('=');
    require(eq != std::string::npos, "plot: series must look like label=file1,file2,...");
    cli::PlotSeries s;
    s.label = spec.substr(0, eq);
    std::string rest = spec.substr(eq + 1);
    std::size_t pos = 0;
    while (pos != std::string::npos) {
      std::size_t comma = rest.find(',', pos);
      std::string path =
          comma == std::string::npos ? rest.substr(pos) : rest.substr(pos, comma - pos);
      if (!path.empty()) s.files.push_back(cli::read_metrics(path));
      pos = comma == std::string::npos ? std::string::npos : comma + 1;
    }
    series.push_back(std::move(s));
  }
  cli::plot_return_curves(series, out_svg,
                          has_floor ? std::optional<double>(floor) : std::nullopt);
  std::printf("wrote %s\n", out_svg.c_str());
  return 0;
}

int analyze_ce_demo(int states, int width, const std::string& out_path) {
  analysis::CeDemoReport rep = analysis::posterior_ce_demo(states, width);
  json j = {{"num_states", rep.num_states},
            {"width", rep.width},
            {"single_policy_ce", rep.single_policy_ce},
            {"mixture_ce", rep.mixture_ce},
            {"ce_gap", rep.ce_gap},
            {"direct_ratios", json::array()}};
  for (const auto& r : rep.direct_ratios) {
    j["direct_ratios"].push_back({{"distance", r.distance},
                                  {"steps", r.steps},
                                  {"mixture_prob", r.mixture_prob},
                                  {"single_prob", r.single_prob},
                                  {"ratio", r.ratio}});
  }
  std::printf("single CE = %.12f (K ln4 = %.12f), mixture CE = %.12f (ln4 = %.12f)\n",
              rep.single_policy_ce, states * std::log(4.0), rep.mixture_ce, std::log(4.0));
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << j.dump(2) << "\n";
  }
  return 0;
}

int analyze_bellman(int width, int instances, std::uint64_t seed, double gamma,
                    const std::string& out_path) {
  double penalty = env::shipped_wall_penalty(width);
  Rng rng(seed);
  json rows = json::array();
  int greedy_wall = 0, optimal_wall = 0;
  for (int i = 0; i < instances; ++i) {
    Rng r = rng.stream(i);
    analysis::MazeInstance inst = analysis::sample_instance(width, penalty, r);
    analysis::TabularQ qr = analysis::solve_random_policy_q(inst, gamma);
    analysis::TabularQ qs = analysis::value_iteration_q(inst, gamma);
    bool gw = analysis::greedy_enters_wall(inst, qr);
    bool ow = !analysis::optimal_avoids_walls(inst, qs);
    greedy_wall += gw ? 1 : 0;
    optimal_wall += ow ? 1 : 0;
    rows.push_back({{"instance", i},
                    {"greedy_of_random_enters_wall", gw},
                    {"optimal_enters_wall", ow},
                    {"residual_random", qr.bellman_residual},
                    {"residual_optimal", qs.bellman_residual}});
  }
  std::printf("width %d, penalty %.0f, %d instances: greedy-of-random enters walls in %d, "
              "optimal in %d\n",
              width, penalty, instances, greedy_wall, optimal_wall);
  if (!out_path.empty()) {
    json j = {{"width", width},
              {"penalty", penalty},
              {"gamma", gamma},
              {"instances", rows},
              {"greedy_wall_count", greedy_wall},
              {"optimal_wall_count", optimal_wall}};
    std::ofstream os(out_path);
    os << j.dump(2) << "\n";
  }
  return 0;
}

int analyze_arrows(const std::string& ck_path, const std::string& env_kind, int width,
                   std::uint64_t seed, const std::string& out_path) {
  nn::Checkpoint ck = nn::load_checkpoint(ck_path);
  Rng rng(seed);
  analysis::OptionGrids grids;
  if (env_kind == "compass") {
    env::CompassEnv e(width);
    grids = analysis::compass_option_grids(ck.model, e);
  } else if (env_kind == "electric_procmaze") {
    env::ProcMazeEnv e(width, true, env::shipped_wall_penalty(width));
    env::EnvState context = e.reset(rng);
    grids = analysis::epm_option_grids(ck.model, e, context);
  } else if (env_kind == "hier_electric_procmaze") {
    env::HierarchicalEnv e(width, env::shipped_wall_penalty(width));
    env::EnvState context = e.reset(rng);
    grids = analysis::hier_option_grids(ck.model, e, context);
  } else {
    throw std::invalid_argument("arrows: unsupported env kind " + env_kind);
  }
  analysis::render_option_grids(grids, out_path, ck.manifest);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

int analyze_diversity(const std::string& ck_path, int width, int states, int rollouts,
                      int horizon, std::uint64_t seed, const std::string& out_path) {
  nn::Checkpoint ck = nn::load_checkpoint(ck_path);
  env::HierarchicalEnv e(width, env::shipped_wall_penalty(width));
  require(e.spec().observation_dim == ck.model.obs_dim(),
          "diversity: checkpoint was not trained on this environment size");
  analysis::DiversityReport rep =
      analysis::option_diversity(e, ck.model, states, rollouts, horizon, Rng(seed));
  json j = {{"num_options", rep.num_options},
            {"states", rep.states},
            {"f_marginal", rep.f_marginal},
            {"f_by_option", rep.f_by_option},
            {"entropy_marginal", rep.entropy_marginal},
            {"entropy_by_option", rep.entropy_by_option},
            {"mi_marginal", rep.mi_marginal},
            {"mi_marginal_ci95", rep.mi_marginal_ci95},
            {"entropy_state_mean", rep.entropy_state_mean},
            {"mi_state_mean", rep.mi_state_mean},
            {"mi_state_ci95", rep.mi_state_ci95},
            {"kept_fraction", rep.kept_fraction},
            {"skipped_state_option_cells", rep.skipped_state_option_cells}};
  std::printf("MI marginal %.4f +- %.4f, state-conditional %.4f +- %.4f (H %.4f / %.4f)\n",
              rep.mi_marginal, rep.mi_marginal_ci95, rep.mi_state_mean, rep.mi_state_ci95,
              rep.entropy_marginal, rep.entropy_state_mean);
  if (!out_path.empty()) {
    std::ofstream os(out_path);
    os << j.dump(2) << "\n";
  }
  return 0;
}

int analyze_penalty(int width, int samples, std::uint64_t seed) {
  int penalty = env::compute_wall_penalty(width, samples, seed);
  std::printf("wall penalty for width %d over %d mazes (seed %llu): %d\n", width, samples,
              static_cast<unsigned long long>(seed), penalty);
  return 0;
}

// Rolls search-driven episodes with a checkpoint and dumps the executed
// trajectories in the offline segmentation format.
int analyze_dump_trajectories(const std::string& ck_path, const std::string& config_path,
                              int episodes, std::uint64_t seed, const std::string& out_path) {
  nn::Checkpoint ck = nn::load_checkpoint(ck_path);
  cli::ExperimentConfig cfg = cli::load_config(config_path);
  auto envp = env::make_environment(cfg.env);
  require(envp->spec().observation_dim == ck.model.obs_dim(),
          "dump-trajectories: checkpoint does not match the configured environment");
  search::SearchConfig scfg{cfg.search.simulation_budget, cfg.search.rollout_length,
                            cfg.search.beta, cfg.search.discount};
  search::RunningVariance rv;
  rv.decay = cfg.search.variance_decay;

  std::vector<term::TrajectoryData<float>> trajs;
  Rng root(seed);
  for (int e = 0; e < episodes; ++e) {
    Rng ep = root.stream(e);
    Rng reset_rng = ep.stream(0);
    env::EnvState state = envp->reset(reset_rng);
    term::TrajectoryData<float> traj;
    for (int t = 0; t < cfg.env.timeout; ++t) {
      Rng step_rng = ep.stream(1 + t);
      Rng search_rng = step_rng.stream(0);
      Rng env_rng = step_rng.stream(1);
      search::SearchResult res =
          search::mcs_with_options(*envp, ck.model, rv, state, scfg, search_rng, nullptr);
      rv.update(res.rollout_returns);
      std::vector<float> obs = envp->observe(state);
      traj.obs.insert(traj.obs.end(), obs.begin(), obs.end());
      ++traj.len;
      traj.actions.push_back(res.a_tilde);
      env::Transition tr = envp->step(state, res.a_tilde, env_rng);
      if (tr.terminal) break;
      state = std::move(tr.next);
    }
    // final state closes the trajectory
    std::vector<float> obs = envp->observe(state);
    traj.obs.insert(traj.obs.end(), obs.begin(), obs.end());
    ++traj.len;
    trajs.push_back(std::move(traj));
  }
  term::write_trajectories(trajs, envp->spec().observation_dim, out_path);
  std::printf("wrote %d trajectories to %s\n", episodes, out_path.c_str());
  return 0;
}

int cmd_selftest();

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Option-discovery framework: Monte-Carlo search distilled into option policies"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "runs/out", out_file, ck_path, env_kind = "compass";
  int threads = 1, width = 15, instances = 25, states = 200, rollouts = 200, horizon = 20,
      samples = 10000, episodes = 32, num_states = 225;
  long long seed = 0, seed_override = -1;
  double gamma = 1.0, floor_val = 0;
  bool synchronous = false;

  auto* run = app.add_subcommand("run", "train per the config, one run per seed");
  run->add_option("--config", config_path)->required();
  run->add_option("--out", out_dir);
  run->add_option("--threads", threads);
  run->add_option("--seed", seed_override);
  run->add_flag("--synchronous", synchronous, "deterministic single-schedule mode");

  auto* sweep = app.add_subcommand("sweep", "grid sweep over step size and entropy factor");
  sweep->add_option("--config", config_path)->required();
  sweep->add_option("--out", out_dir);
  sweep->add_option("--threads", threads);
  sweep->add_flag("--synchronous", synchronous);

  std::vector<std::string> series_specs;
  auto* plot = app.add_subcommand("plot", "windowed-return curves with 95% CIs");
  plot->add_option("--series", series_specs, "label=metrics1.csv,metrics2.csv,...")
      ->required();
  plot->add_option("--out", out_file)->required();
  auto* floor_opt = plot->add_option("--floor", floor_val, "threshold the y axis from below");

  auto* analyze = app.add_subcommand("analyze", "reproduction and diagnostic reports");
  analyze->require_subcommand(1);
  auto* ce = analyze->add_subcommand("ce-demo", "single-policy vs mixture cross-entropy");
  ce->add_option("--states", num_states);
  ce->add_option("--width", width);
  ce->add_option("--out", out_file);
  auto* bell = analyze->add_subcommand("bellman", "random-policy Q vs optimal policy");
  bell->add_option("--width", width);
  bell->add_option("--instances", instances);
  bell->add_option("--seed", seed);
  bell->add_option("--gamma", gamma);
  bell->add_option("--out", out_file);
  auto* arrows = analyze->add_subcommand("arrows", "option arrow grids (SVG)");
  arrows->add_option("--checkpoint", ck_path)->required();
  arrows->add_option("--env", env_kind);
  arrows->add_option("--width", width);
  arrows->add_option("--seed", seed);
  arrows->add_option("--out", out_file)->required();
  auto* div = analyze->add_subcommand("diversity", "button-reach diversity statistics");
  div->add_option("--checkpoint", ck_path)->required();
  div->add_option("--width", width);
  div->add_option("--states", states);
  div->add_option("--rollouts", rollouts);
  div->add_option("--horizon", horizon);
  div->add_option("--seed", seed);
  div->add_option("--out", out_file);
  auto* pen = analyze->add_subcommand("penalty", "wall-penalty oracle over sampled mazes");
  pen->add_option("--width", width);
  pen->add_option("--samples", samples);
  pen->add_option("--seed", seed);
  auto* dump = analyze->add_subcommand("dump-trajectories",
                                       "search-driven trajectories in the offline format");
  dump->add_option("--checkpoint", ck_path)->required();
  dump->add_option("--config", config_path)->required();
  dump->add_option("--episodes", episodes);
  dump->add_option("--seed", seed);
  dump->add_option("--out", out_file)->required();

  auto* ckd = app.add_subcommand("checkpoint-dump", "layer shapes and norms");
  ckd->add_option("--checkpoint", ck_path)->required();

  app.add_subcommand("selftest", "oracle suites: kernels, recursion, gradients");

  CLI11_PARSE(app, argc, argv);

  try {
    if (app.got_subcommand("run"))
      return cmd_run(config_path, out_dir, threads, synchronous, seed_override);
    if (app.got_subcommand("sweep")) return cmd_sweep(config_path, out_dir, threads, synchronous);
    if (app.got_subcommand("plot"))
      return cmd_plot(series_specs, out_file, floor_val, floor_opt->count() > 0);
    if (app.got_subcommand("analyze")) {
      if (analyze->got_subcommand("ce-demo")) return analyze_ce_demo(num_states, width, out_file);
      if (analyze->got_subcommand("bellman"))
        return analyze_bellman(width, instances, seed, gamma, out_file);
      if (analyze->got_subcommand("arrows"))
        return analyze_arrows(ck_path, env_kind, width, seed, out_file);
      if (analyze->got_subcommand("diversity"))
        return analyze_diversity(ck_path, width, states, rollouts, horizon, seed, out_file);
      if (analyze->got_subcommand("penalty")) return analyze_penalty(width, samples, seed);
      if (analyze->got_subcommand("dump-trajectories"))
        return analyze_dump_trajectories(ck_path, config_path, episodes, seed, out_file);
    }
    if (app.got_subcommand("checkpoint-dump")) {
      std::cout << nn::describe_checkpoint(ck_path);
      return 0;
    }
    if (app.got_subcommand("selftest")) return cmd_selftest();
  } catch (const std::exception& ex) {
    std::fprintf(stderr, "error: %s\n", ex.what());
    return 1;
  }
  return 0;
}

namespace {

// Quick oracle suites, also covered in depth by the test suite.
int cmd_selftest() {
  int failures = 0;
  auto check = [&](bool ok, const char* name) {
    std::printf("[%s] %s\n", ok ? "PASS" : "FAIL", name);
    if (!ok) ++failures;
  };

  // Deterministic rng streams.
  {
    Rng a(7), b(7);
    bool ok = true;
    for (int i = 0; i < 100; ++i) ok = ok && a.next_u64() == b.next_u64();
    check(ok, "rng determinism");
  }

  // Scalar vs AVX2 kernels.
  if (kern::avx2_available()) {
    Rng rng(3);
    const int out = 33, in = 77;
    std::vector<float> w(out * in), b(out), x(in), y1(out), y2(out);
    for (auto& v : w) v = static_cast<float>(rng.uniform() * 2 - 1);
    for (auto& v : b) v = static_cast<float>(rng.uniform() * 2 - 1);
    for (auto& v : x) v = static_cast<float>(rng.uniform() * 2 - 1);
    kern::scalar_ops<float>().matvec_bias(w.data(), b.data(), x.data(), y1.data(), out, in);
    kern::avx2_ops<float>().matvec_bias(w.data(), b.data(), x.data(), y2.data(), out, in);
    bool ok = true;
    for (int i = 0; i < out; ++i) ok = ok && std::fabs(y1[i] - y2[i]) < 1e-4f;
    check(ok, "kernel equivalence (matvec)");
  } else {
    std::printf("[SKIP] kernel equivalence (no avx2)\n");
  }

  // Termination recursion against brute-force enumeration.
  {
    Rng rng(11);
    bool ok = true;
    for (int trial = 0; trial < 20 && ok; ++trial) {
      int N = 2 + static_cast<int>(rng.below(2));
      int K = 2 + static_cast<int>(rng.below(4));
      auto m = nn::Model<double>::make(6, {8}, N, 3, true);
      Rng init = rng.stream(trial);
      m.init_params(init);
      for (auto& p : m.policy.params()) p = rng.uniform() * 2 - 1;
      term::TrajectoryData<double> traj;
      traj.len = K + 1;
      for (int k = 0; k < K + 1; ++k) {
        for (int d = 0; d < 6; ++d) traj.obs.push_back(rng.below(2));
        if (k < K) traj.actions.push_back(static_cast<int>(rng.below(3)));
      }
      double lik = term::trajectory_log_likelihood(m, traj);
      double ref = term::brute_force_log_likelihood(m, traj);
      ok = std::fabs(lik - ref) < 1e-9;
    }
    check(ok, "termination recursion vs enumeration oracle");
  }

  std::printf("%s\n", failures == 0 ? "selftest OK" : "selftest FAILED");
  return failures == 0 ? 0 : 1;
}

}  // namespace
