#include "actpc/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace actpc {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

[[noreturn]] void config_error(const std::string& key, const std::string& what) {
  throw Error("config key '" + key + "': " + what);
}

void check_known_keys(const json& j, const std::set<std::string>& known,
                      const std::string& where) {
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) config_error(where + "." + key, "unknown key");
}

template <typename T>
T get_field(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    config_error(key, "wrong type");
  }
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

double iqr(std::vector<double> v) {
  if (v.size() < 2) return 0.0;
  std::sort(v.begin(), v.end());
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(v.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    return lo + 1 < v.size() ? v[lo] * (1 - frac) + v[lo + 1] * frac : v[lo];
  };
  return quantile(0.75) - quantile(0.25);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
}

void write_matrix_csv(const fs::path& path, const Matrix& m) {
  std::string text;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += fmt(m(i, j));
    }
    text += '\n';
  }
  write_text(path, text);
}

}  // namespace

TrainerConfig parse_trainer_config(const json& j) {
  static const std::set<std::string> known = {
      "h", "ridge_scale", "graph_k", "sigma", "smoothing", "window",
      "alpha_int", "alpha_ep", "alpha_ep_decay_at", "budget", "prune_floor",
      "prune_patience", "seed", "updater", "max_iterations", "gamma",
      "reward_bias", "explore_eps", "explore_floor", "warmup", "edits_per_iter", "max_rules", "min_rules",
      "chain", "chain_depth", "extended_outcomes", "abstraction_interval",
      "abstraction_support", "abstraction_lift", "naive_interval",
      "e_threshold", "discrepancy_threshold", "max_lag", "activity_level",
      "airis_lower_confidence", "airis_lower_trials"};
  check_known_keys(j, known, "trainer");
  TrainerConfig cfg;
  cfg.h = get_field(j, "h", cfg.h);
  cfg.ridge_scale = get_field(j, "ridge_scale", cfg.ridge_scale);
  cfg.graph_k = get_field(j, "graph_k", cfg.graph_k);
  cfg.sigma = get_field(j, "sigma", cfg.sigma);
  cfg.smoothing = get_field(j, "smoothing", cfg.smoothing);
  cfg.window = get_field<std::size_t>(j, "window", cfg.window);
  cfg.alpha_int = get_field(j, "alpha_int", cfg.alpha_int);
  cfg.alpha_ep = get_field(j, "alpha_ep", cfg.alpha_ep);
  cfg.alpha_ep_decay_at = get_field(j, "alpha_ep_decay_at", cfg.alpha_ep_decay_at);
  cfg.budget = get_field(j, "budget", cfg.budget);
  cfg.prune_floor = get_field(j, "prune_floor", cfg.prune_floor);
  cfg.prune_patience = get_field(j, "prune_patience", cfg.prune_patience);
  cfg.seed = get_field<std::uint64_t>(j, "seed", cfg.seed);
  if (j.contains("updater"))
    cfg.updater = updater_from_string(j.at("updater").get<std::string>());
  cfg.max_iterations = get_field<long>(j, "max_iterations", cfg.max_iterations);
  cfg.gamma = get_field(j, "gamma", cfg.gamma);
  cfg.reward_bias = get_field(j, "reward_bias", cfg.reward_bias);
  cfg.explore_eps = get_field(j, "explore_eps", cfg.explore_eps);
  cfg.explore_floor = get_field(j, "explore_floor", cfg.explore_floor);
  cfg.warmup = get_field<std::size_t>(j, "warmup", cfg.warmup);
  cfg.edits_per_iter = get_field(j, "edits_per_iter", cfg.edits_per_iter);
  cfg.max_rules = get_field<std::size_t>(j, "max_rules", cfg.max_rules);
  cfg.min_rules = get_field<std::size_t>(j, "min_rules", cfg.min_rules);
  cfg.chain = get_field(j, "chain", cfg.chain);
  cfg.chain_depth = get_field(j, "chain_depth", cfg.chain_depth);
  cfg.extended_outcomes = get_field(j, "extended_outcomes", cfg.extended_outcomes);
  cfg.abstraction_interval = get_field<long>(j, "abstraction_interval", cfg.abstraction_interval);
  cfg.abstraction_support = get_field(j, "abstraction_support", cfg.abstraction_support);
  cfg.abstraction_lift = get_field(j, "abstraction_lift", cfg.abstraction_lift);
  cfg.naive_interval = get_field<long>(j, "naive_interval", cfg.naive_interval);
  cfg.e_threshold = get_field(j, "e_threshold", cfg.e_threshold);
  cfg.airis.discrepancy_threshold =
      get_field(j, "discrepancy_threshold", cfg.airis.discrepancy_threshold);
  cfg.airis.max_lag = get_field(j, "max_lag", cfg.airis.max_lag);
  cfg.airis.activity_level = get_field(j, "activity_level", cfg.airis.activity_level);
  cfg.airis_lower_confidence =
      get_field(j, "airis_lower_confidence", cfg.airis_lower_confidence);
  cfg.airis_lower_trials = get_field<long>(j, "airis_lower_trials", cfg.airis_lower_trials);
  if (cfg.h <= 0) config_error("trainer.h", "must be positive");
  if (cfg.window == 0) config_error("trainer.window", "must be positive");
  if (cfg.max_iterations < 0) config_error("trainer.max_iterations", "must be >= 0");
  if (cfg.alpha_int == 0 && cfg.alpha_ep == 0)
    config_error("trainer.alpha_int", "alpha_int and alpha_ep cannot both be zero");
  return cfg;
}

ExperimentConfig parse_experiment_config(const json& j) {
  static const std::set<std::string> known = {"name",    "env",     "trainer",
                                              "seeds",   "repeat",  "out_dir",
                                              "updaters", "eval_episodes"};
  check_known_keys(j, known, "experiment");
  ExperimentConfig cfg;
  cfg.raw = j;
  if (!j.contains("name")) config_error("name", "missing");
  cfg.name = j.at("name").get<std::string>();
  if (!j.contains("env")) config_error("env", "missing");
  cfg.env = j.at("env");
  make_env(cfg.env);  // validate eagerly
  cfg.trainer = j.contains("trainer") ? parse_trainer_config(j.at("trainer"))
                                      : TrainerConfig{};
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (cfg.seeds.empty()) config_error("seeds", "must be non-empty");
  } else if (j.contains("repeat")) {
    const int n = j.at("repeat").get<int>();
    if (n < 1) config_error("repeat", "must be >= 1");
    cfg.seeds.clear();
    for (int i = 0; i < n; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  } else {
    cfg.seeds = {cfg.trainer.seed};
  }
  cfg.out_dir = get_field<std::string>(j, "out_dir", cfg.out_dir);
  if (j.contains("updaters"))
    for (const auto& u : j.at("updaters"))
      cfg.updaters.push_back(updater_from_string(u.get<std::string>()));
  cfg.eval_episodes = get_field(j, "eval_episodes", cfg.eval_episodes);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read config: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw Error("config parse error in " + path + ": " + e.what());
  }
  return parse_experiment_config(j);
}

EvalSummary evaluate_policy(const std::vector<RewriteRule>& rules,
                            const Vector& logits, Env& env, int episodes,
                            std::uint64_t seed, bool greedy) {
  EvalSummary summary;
  summary.episodes = episodes;
  if (episodes == 0) return summary;
  Vector pi = rule_probs({logits});
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 7);
  long total_steps = 0, sick = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    WorldState obs = env.reset(seed + static_cast<std::uint64_t>(ep));
    double total = 0.0;
    while (!env.done()) {
      // Matching rules whose rewrite emits an action.
      std::string action;
      if (greedy) {
        double best = -1.0;
        for (std::size_t r = 0; r < rules.size(); ++r) {
          if (pi(static_cast<Eigen::Index>(r)) <= best) continue;
          auto out = apply_rule(rules[r], obs);
          if (!out) continue;
          std::string a = action_of(*out);
          if (a == "-") continue;
          best = pi(static_cast<Eigen::Index>(r));
          action = a;
        }
      } else {
        std::vector<std::size_t> subset;
        std::vector<std::string> acts;
        for (std::size_t r = 0; r < rules.size(); ++r) {
          auto out = apply_rule(rules[r], obs);
          if (!out) continue;
          std::string a = action_of(*out);
          if (a == "-") continue;
          subset.push_back(r);
          acts.push_back(std::move(a));
        }
        if (!subset.empty()) {
          std::vector<double> pv(pi.data(), pi.data() + pi.size());
          auto renorm = renormalize(pv, subset);
          std::uniform_real_distribution<double> uni(0.0, 1.0);
          double u = uni(rng), acc = 0.0;
          std::size_t k = renorm.size() - 1;
          for (std::size_t i = 0; i < renorm.size(); ++i) {
            acc += renorm[i];
            if (u < acc) {
              k = i;
              break;
            }
          }
          action = acts[k];
        }
      }
      if (action.empty()) action = env.actions().front();
      StepResult res = env.step(action);
      total += res.reward;
      ++total_steps;
      if (auto it = res.info.find("effect"); it != res.info.end() && it->second == "sickness")
        ++sick;
      obs = res.observation;
    }
    summary.mean_reward += total;
    summary.success_rate += env.success() ? 1.0 : 0.0;
    summary.mean_length += static_cast<double>(env.steps());
  }
  summary.mean_reward /= episodes;
  summary.success_rate /= episodes;
  summary.mean_length /= episodes;
  summary.sickness_per_step =
      total_steps > 0 ? static_cast<double>(sick) / static_cast<double>(total_steps) : 0.0;
  return summary;
}

SnapshotEval evaluate_snapshot(const std::string& snapshot_path, int episodes,
                               bool greedy, std::uint64_t seed) {
  Snapshot snap = Snapshot::load(snapshot_path);
  SnapshotEval out;
  out.hash_mismatch = config_hash(snap.config) != snap.config_hash;
  if (!snap.config.contains("env")) throw Error("snapshot config has no env section");
  auto env = make_env(snap.config.at("env"));
  out.summary = evaluate_policy(snap.rules, snap.logits, *env, episodes, seed, greedy);
  return out;
}

std::string metrics_to_csv(const std::vector<IterationMetrics>& rows) {
  std::string out = "iter,e_t,r_int,r_ep,r_env,r_t,n_rules,updater\n";
  for (const IterationMetrics& m : rows) {
    out += std::to_string(m.iter);
    out += ',';
    out += fmt(m.e_t);
    out += ',';
    out += fmt(m.r_int);
    out += ',';
    out += fmt(m.r_ep);
    out += ',';
    out += fmt(m.r_env);
    out += ',';
    out += fmt(m.r_t);
    out += ',';
    out += std::to_string(m.n_rules);
    out += ',';
    out += m.updater;
    out += '\n';
  }
  return out;
}

SeedResult run_seed(const ExperimentConfig& cfg, Updater updater,
                    std::uint64_t seed) {
  SeedResult result;
  result.seed = seed;
  result.updater = updater;
  TrainerConfig tc = cfg.trainer;
  tc.updater = updater;
  tc.seed = seed;
  auto env = make_env(cfg.env);
  Trainer trainer(tc, *env);
  const auto start = std::chrono::steady_clock::now();
  result.metrics = trainer.train();
  result.train_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  result.iters_to_threshold = tc.max_iterations;
  for (const IterationMetrics& m : result.metrics) {
    if (m.e_t < tc.e_threshold) {
      result.iters_to_threshold = m.iter;
      break;
    }
  }
  result.final_e = result.metrics.empty() ? 0.0 : result.metrics.back().e_t;
  result.descent_violations = trainer.descent_violations();

  auto eval_env = make_env(cfg.env);
  result.eval = evaluate_policy(trainer.rules(), trainer.params().logits, *eval_env,
                                cfg.eval_episodes, 1000 + seed, /*greedy=*/true);
  json run_config = cfg.raw;
  run_config["trainer"]["seed"] = seed;
  run_config["trainer"]["updater"] = to_string(updater);
  result.snapshot = Snapshot::from_trainer(trainer, std::move(run_config));
  return result;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, bool dump_geometry,
                                bool write_files) {
  ExperimentResult result;
  const fs::path root = fs::path(cfg.out_dir) / cfg.name;
  result.root = root.string();
  if (write_files) fs::create_directories(root);

  const Updater updater = cfg.trainer.updater;
  for (std::uint64_t seed : cfg.seeds) {
    SeedResult run = run_seed(cfg, updater, seed);
    if (write_files) {
      const fs::path seed_dir = root / std::to_string(seed);
      fs::create_directories(seed_dir);
      write_text(seed_dir / ("metrics_seed" + std::to_string(seed) + ".csv"),
                 metrics_to_csv(run.metrics));
      run.snapshot.save((seed_dir / ("snapshot_seed" + std::to_string(seed) + ".json")).string());
      if (dump_geometry) {
        auto env = make_env(cfg.env);
        TrainerConfig tc = cfg.trainer;
        tc.seed = seed;
        Trainer probe(tc, *env);
        probe.restore(run.snapshot.rules, run.snapshot.logits, run.snapshot.causal,
                      run.snapshot.iteration, "");
        if (auto geo = probe.geometry()) {
          write_matrix_csv(seed_dir / "geometry_L.csv", geo->laplacian);
          write_matrix_csv(seed_dir / "geometry_G.csv", geo->metric);
          std::string eigs = "matrix,index,eigenvalue\n";
          for (Eigen::Index i = 0; i < geo->laplacian_eigs.size(); ++i)
            eigs += "L," + std::to_string(i) + "," + fmt(geo->laplacian_eigs(i)) + "\n";
          for (Eigen::Index i = 0; i < geo->metric_eigs.size(); ++i)
            eigs += "G," + std::to_string(i) + "," + fmt(geo->metric_eigs(i)) + "\n";
          write_text(seed_dir / "geometry_eigs.csv", eigs);
        }
      }
    }
    result.runs.push_back(std::move(run));
  }

  if (write_files) {
    std::string runs_csv =
        "updater,seed,iters_to_threshold,final_e,mean_reward,success_rate,mean_length,"
        "sickness_per_step\n";
    std::vector<double> iters, success;
    for (const SeedResult& run : result.runs) {
      runs_csv += to_string(run.updater) + "," + std::to_string(run.seed) + "," +
                  std::to_string(run.iters_to_threshold) + "," + fmt(run.final_e) + "," +
                  fmt(run.eval.mean_reward) + "," + fmt(run.eval.success_rate) + "," +
                  fmt(run.eval.mean_length) + "," + fmt(run.eval.sickness_per_step) + "\n";
      iters.push_back(static_cast<double>(run.iters_to_threshold));
      success.push_back(run.eval.success_rate);
    }
    write_text(root / "runs.csv", runs_csv);

    std::string summary_csv = "updater,median_iters_to_threshold,final_greedy_success_rate\n";
    summary_csv += to_string(updater) + "," + fmt(median(iters)) + "," +
                   fmt(median(success)) + "\n";
    write_text(root / "summary.csv", summary_csv);
  }
  return result;
}

std::vector<CompareRow> compare_updaters(const ExperimentConfig& cfg, bool write_files) {
  if (cfg.updaters.size() < 2)
    throw Error("config key 'updaters': compare needs at least 2 updaters");
  std::vector<CompareRow> rows;
  for (Updater updater : cfg.updaters) {
    std::vector<double> iters, finals, sickness;
    for (std::uint64_t seed : cfg.seeds) {
      SeedResult run = run_seed(cfg, updater, seed);
      iters.push_back(static_cast<double>(run.iters_to_threshold));
      finals.push_back(run.final_e);
      sickness.push_back(run.eval.sickness_per_step);
    }
    CompareRow row;
    row.updater = to_string(updater);
    row.median_iters = median(iters);
    row.iqr_iters = iqr(iters);
    row.median_final_e = median(finals);
    row.iqr_final_e = iqr(finals);
    row.sickness_rate = median(sickness);
    rows.push_back(row);
  }
  if (write_files) {
    const fs::path root = fs::path(cfg.out_dir) / cfg.name;
    fs::create_directories(root);
    std::string csv = "updater,median_iters,iqr_iters,median_final_e,iqr_final_e,sickness_rate\n";
    for (const CompareRow& r : rows)
      csv += r.updater + "," + fmt(r.median_iters) + "," + fmt(r.iqr_iters) + "," +
             fmt(r.median_final_e) + "," + fmt(r.iqr_final_e) + "," +
             fmt(r.sickness_rate) + "\n";
    write_text(root / "compare.csv", csv);
    write_text(root / "compare.txt", compare_table_text(rows));
  }
  return rows;
}

std::string compare_table_text(const std::vector<CompareRow>& rows) {
  char buf[160];
  std::string out;
  std::snprintf(buf, sizeof(buf), "%-14s %14s %10s %14s %12s %14s\n", "updater",
                "median_iters", "iqr_iters", "median_final_e", "iqr_final_e",
                "sickness_rate");
  out += buf;
  for (const CompareRow& r : rows) {
    std::snprintf(buf, sizeof(buf), "%-14s %14.6g %10.6g %14.6g %12.6g %14.6g\n",
                  r.updater.c_str(), r.median_iters, r.iqr_iters, r.median_final_e,
                  r.iqr_final_e, r.sickness_rate);
    out += buf;
  }
  return out;
}

}  // namespace actpc
