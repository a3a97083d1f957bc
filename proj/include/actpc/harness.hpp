#pragma once

#include "actpc/snapshot.hpp"

namespace actpc {

/// Experiment description: env section, trainer section, seeds, output
/// directory, optional updater list for comparisons.
struct ExperimentConfig {
  nlohmann::json raw;
  std::string name;
  nlohmann::json env;
  TrainerConfig trainer;
  std::vector<std::uint64_t> seeds = {0};
  std::string out_dir = "out";
  std::vector<Updater> updaters;
  int eval_episodes = 100;
};

/// Throws Error naming the offending key on invalid input.
ExperimentConfig parse_experiment_config(const nlohmann::json& j);
ExperimentConfig load_experiment_config(const std::string& path);
TrainerConfig parse_trainer_config(const nlohmann::json& j);

struct EvalSummary {
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double mean_length = 0.0;
  double sickness_per_step = 0.0;
  int episodes = 0;
};

/// Rolls out the rule-store policy. Greedy mode picks the argmax-probability
/// matching rule (deterministic); otherwise rules are sampled from the
/// renormalized distribution.
EvalSummary evaluate_policy(const std::vector<RewriteRule>& rules,
                            const Vector& logits, Env& env, int episodes,
                            std::uint64_t seed, bool greedy = true);

/// Loads a snapshot, rebuilds its env from the embedded config and evaluates
/// the stored policy. Warns on a config-hash mismatch via the returned flag.
struct SnapshotEval {
  EvalSummary summary;
  bool hash_mismatch = false;
};
SnapshotEval evaluate_snapshot(const std::string& snapshot_path, int episodes,
                               bool greedy = true, std::uint64_t seed = 1000);

struct SeedResult {
  std::uint64_t seed = 0;
  Updater updater = Updater::Natural;
  std::vector<IterationMetrics> metrics;
  long iters_to_threshold = 0;
  double final_e = 0.0;
  EvalSummary eval;
  long descent_violations = 0;
  double train_seconds = 0.0;
  Snapshot snapshot;
};

SeedResult run_seed(const ExperimentConfig& cfg, Updater updater,
                    std::uint64_t seed);

struct ExperimentResult {
  std::vector<SeedResult> runs;
  std::string root;  // <out_dir>/<name>
};

/// Runs every configured seed, writing per-seed metrics CSVs and snapshots
/// plus a summary table at the experiment root.
ExperimentResult run_experiment(const ExperimentConfig& cfg,
                                bool dump_geometry = false,
                                bool write_files = true);

struct CompareRow {
  std::string updater;
  double median_iters = 0.0;
  double iqr_iters = 0.0;
  double median_final_e = 0.0;
  double iqr_final_e = 0.0;
  double sickness_rate = 0.0;
};

/// Runs each configured updater over the seed list and reports medians and
/// IQRs; requires >= 2 updaters. Report only, no pass/fail claim.
std::vector<CompareRow> compare_updaters(const ExperimentConfig& cfg,
                                         bool write_files = true);
std::string compare_table_text(const std::vector<CompareRow>& rows);

std::string metrics_to_csv(const std::vector<IterationMetrics>& rows);

}  // namespace actpc
