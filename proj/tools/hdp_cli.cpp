// Command-line driver: train / eval / analyze-modes / plot.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hdp/harness.hpp"

namespace {

hdp::RunConfig build_config(const std::string& config_path, const std::string& env_id,
                            long total_steps, long seed, const std::string& out_dir,
                            const std::vector<std::string>& flags) {
  hdp::RunConfig cfg;
  if (!config_path.empty()) cfg = hdp::load_run_config(config_path);
  if (!env_id.empty()) cfg.env_id = env_id;
  if (total_steps > 0) cfg.train.total_steps = total_steps;
  if (seed >= 0) cfg.train.seed = static_cast<uint64_t>(seed);
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  for (const auto& f : flags) {
    if (f == "deterministic_policy") cfg.train.deterministic_policy = true;
    else if (f == "no_codebook") cfg.train.no_codebook = true;
    else if (f == "concurrent_update") cfg.train.concurrent_update = true;
    else throw CLI::ValidationError("unknown ablation flag: " + f);
  }
  cfg.validate();
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hybrid diffusion policy runner"};
  app.require_subcommand(1);

  // shared options
  std::string config_path, env_id, out_dir, checkpoint_path, out_path;
  long total_steps = 0, seed = -1;
  int episodes = 100;
  bool random_baseline = false, quiet = false;
  std::vector<std::string> ablations, run_dirs;
  std::string codebook_csv_path;

  auto* train = app.add_subcommand("train", "train an agent and write a run directory");
  train->add_option("--config", config_path, "JSON run config (defaults apply on top)");
  train->add_option("--env", env_id, "environment id");
  train->add_option("--steps", total_steps, "total environment steps");
  train->add_option("--seed", seed, "rng seed");
  train->add_option("--out", out_dir, "output run directory");
  train->add_option("--ablation", ablations,
                    "deterministic_policy | no_codebook | concurrent_update");
  train->add_flag("--quiet", quiet, "suppress progress output");

  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint (or random policy)");
  eval->add_option("--checkpoint", checkpoint_path, "checkpoint JSON");
  eval->add_option("--env", env_id, "environment id (required with --random)");
  eval->add_option("--episodes", episodes, "evaluation episodes");
  eval->add_option("--seed", seed, "evaluation seed");
  eval->add_flag("--random", random_baseline, "evaluate the uniform-random policy");

  auto* modes = app.add_subcommand(
      "analyze-modes", "trial a checkpoint on a single-step hard_move env and "
                       "report discrete/continuous action modes");
  modes->add_option("--checkpoint", checkpoint_path, "checkpoint JSON")->required();
  modes->add_option("--trials", episodes, "number of trials");
  modes->add_option("--seed", seed, "trial seed");
  modes->add_option("--out", out_path, "write the mode table as CSV");
  modes->add_option("--codebook-csv", codebook_csv_path,
                    "also dump codebook entries + selection counts");

  auto* plot = app.add_subcommand("plot", "success-rate curve (SVG) across runs");
  plot->add_option("--run", run_dirs, "run directory (repeatable)")->required();
  plot->add_option("--out", out_path, "output SVG path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) {
      hdp::RunConfig cfg = build_config(config_path, env_id, total_steps, seed,
                                        out_dir, ablations);
      auto progress = [&](long step) {
        if (!quiet && step % 5000 == 0)
          std::cout << "step " << step << "/" << cfg.train.total_steps << "\n" << std::flush;
      };
      std::string dir = hdp::run_train(cfg, progress);
      auto report = hdp::read_eval_report(dir);
      std::cout << "run complete: " << dir
                << " final_window_avg=" << report.final_window_avg() << "\n";
    } else if (eval->parsed()) {
      uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 0;
      if (random_baseline) {
        if (env_id.empty()) throw CLI::ValidationError("--random needs --env");
        auto env = hdp::envs::make_env(env_id);
        auto res = hdp::evaluate_random_policy(*env, episodes, s);
        std::cout << "random policy on " << env_id << ": success_rate="
                  << res.success_rate << " mean_return=" << res.mean_return << "\n";
      } else {
        if (checkpoint_path.empty())
          throw CLI::ValidationError("need --checkpoint or --random");
        auto ck = hdp::load_checkpoint(checkpoint_path);
        auto env = hdp::envs::make_env(ck.cfg.env_id);
        auto res = hdp::evaluate(ck.agent, *env, episodes, s);
        std::cout << ck.cfg.env_id << " @ step " << ck.step << ": success_rate="
                  << res.success_rate << " mean_return=" << res.mean_return << "\n";
      }
    } else if (modes->parsed()) {
      auto ck = hdp::load_checkpoint(checkpoint_path);
      uint64_t s = seed >= 0 ? static_cast<uint64_t>(seed) : 0;
      auto report = hdp::analyze_modes(ck.agent, ck.cfg.env_id, episodes, s);
      std::string csv = hdp::mode_report_csv(report);
      std::cout << csv;
      if (!out_path.empty()) std::ofstream(out_path) << csv;
      if (!codebook_csv_path.empty())
        std::ofstream(codebook_csv_path) << hdp::codebook_csv(ck.agent);
    } else if (plot->parsed()) {
      hdp::plot_runs(run_dirs, out_path);
      std::cout << "wrote " << out_path << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
