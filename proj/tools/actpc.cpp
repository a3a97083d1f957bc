// Experiment runner CLI: seeded training runs, snapshot evaluation and
// updater comparisons over JSON experiment configs.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "actpc/harness.hpp"

namespace {

void apply_seed_override(actpc::ExperimentConfig& cfg, const std::string& seed_flag) {
  // --seed beats ACTPC_SEED beats the config.
  std::string value = seed_flag;
  if (value.empty()) {
    if (const char* env = std::getenv("ACTPC_SEED")) value = env;
  }
  if (!value.empty()) cfg.seeds = {std::stoull(value)};
}

int run_cmd(const std::string& config_path, const std::string& seed,
            const std::string& out, bool dump_geometry) {
  actpc::ExperimentConfig cfg = actpc::load_experiment_config(config_path);
  apply_seed_override(cfg, seed);
  if (!out.empty()) cfg.out_dir = out;
  actpc::ExperimentResult result = actpc::run_experiment(cfg, dump_geometry);
  std::cout << "wrote " << result.root << " (" << result.runs.size() << " seeds)\n";
  for (const actpc::SeedResult& run : result.runs) {
    std::cout << "seed " << run.seed << ": final_e=" << run.final_e
              << " iters_to_threshold=" << run.iters_to_threshold
              << " eval_reward=" << run.eval.mean_reward
              << " success=" << run.eval.success_rate << "\n";
  }
  return 0;
}

int eval_cmd(const std::string& snapshot_path, int episodes, bool sample,
             std::uint64_t seed) {
  actpc::SnapshotEval eval =
      actpc::evaluate_snapshot(snapshot_path, episodes, !sample, seed);
  if (eval.hash_mismatch)
    std::cerr << "warning: snapshot config hash mismatch\n";
  std::cout << "episodes=" << eval.summary.episodes
            << " mean_reward=" << eval.summary.mean_reward
            << " success_rate=" << eval.summary.success_rate
            << " mean_length=" << eval.summary.mean_length
            << " sickness_per_step=" << eval.summary.sickness_per_step << "\n";
  return 0;
}

int compare_cmd(const std::string& config_path, const std::string& seed,
                const std::string& out) {
  actpc::ExperimentConfig cfg = actpc::load_experiment_config(config_path);
  apply_seed_override(cfg, seed);
  if (!out.empty()) cfg.out_dir = out;
  auto rows = actpc::compare_updaters(cfg);
  std::cout << actpc::compare_table_text(rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete active predictive coding over rewrite-rule populations"};
  app.require_subcommand(1);

  std::string config_path, snapshot_path, seed, out;
  int episodes = 100;
  bool dump_geometry = false, sample = false;
  std::uint64_t eval_seed = 1000;

  CLI::App* run = app.add_subcommand("run", "Run a training experiment");
  run->add_option("config", config_path, "experiment config (JSON)")->required();
  run->add_option("--seed", seed, "override the config seed list");
  run->add_option("--out", out, "output directory");
  run->add_flag("--dump-geometry", dump_geometry,
                "dump L, G and eigenvalue spectra CSVs per seed");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a snapshot policy");
  eval->add_option("snapshot", snapshot_path, "snapshot file")->required();
  eval->add_option("--episodes", episodes, "evaluation episodes")->required();
  eval->add_flag("--sample", sample, "sample rules instead of greedy argmax");
  eval->add_option("--seed", eval_seed, "evaluation seed");

  CLI::App* compare = app.add_subcommand("compare", "Compare configured updaters");
  compare->add_option("config", config_path, "experiment config (JSON)")->required();
  compare->add_option("--seed", seed, "override the config seed list");
  compare->add_option("--out", out, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_cmd(config_path, seed, out, dump_geometry);
    if (eval->parsed()) return eval_cmd(snapshot_path, episodes, sample, eval_seed);
    if (compare->parsed()) return compare_cmd(config_path, seed, out);
  } catch (const actpc::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
