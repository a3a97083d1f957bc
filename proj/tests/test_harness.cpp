#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "actpc/harness.hpp"

using namespace actpc;
namespace fs = std::filesystem;

namespace {

nlohmann::json corridor_json(const std::string& updater, long iters, int repeat) {
  return nlohmann::json{
      {"name", "corridor-test"},
      {"env", {{"type", "corridor"}}},
      {"trainer", {{"updater", updater}, {"max_iterations", iters}, {"seed", 0}}},
      {"repeat", repeat},
      {"eval_episodes", 5},
  };
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in);
  return std::string((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
}

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() /
                   ("actpc_test_" + std::to_string(::getpid()) + "_" +
                    std::to_string(counter++))) {
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  static inline int counter = 0;
};

}  // namespace

TEST_CASE("config validation names the offending key") {
  CHECK_THROWS_WITH_AS(parse_experiment_config({{"env", {{"type", "corridor"}}}}),
                       "config key 'name': missing", Error);
  CHECK_THROWS_WITH_AS(parse_experiment_config({{"name", "x"}}),
                       "config key 'env': missing", Error);

  nlohmann::json typo = corridor_json("natural", 10, 1);
  typo["trainer"]["window_size"] = 5;
  CHECK_THROWS_WITH_AS(parse_experiment_config(typo),
                       "config key 'trainer.window_size': unknown key", Error);

  nlohmann::json bad_updater = corridor_json("sideways", 10, 1);
  CHECK_THROWS_AS(parse_experiment_config(bad_updater), Error);

  nlohmann::json bad_seeds = corridor_json("natural", 10, 1);
  bad_seeds.erase("repeat");
  bad_seeds["seeds"] = nlohmann::json::array();
  CHECK_THROWS_WITH_AS(parse_experiment_config(bad_seeds),
                       "config key 'seeds': must be non-empty", Error);
}

TEST_CASE("metrics CSV follows the exported format") {
  IterationMetrics m;
  m.iter = 3;
  m.e_t = 0.5;
  m.r_int = -0.5;
  m.r_ep = 1.25;
  m.r_env = 1.0;
  m.r_t = 1.75;
  m.n_rules = 4;
  m.updater = "naive";
  const std::string csv = metrics_to_csv({m});
  CHECK(csv == "iter,e_t,r_int,r_ep,r_env,r_t,n_rules,updater\n"
               "3,0.5,-0.5,1.25,1,1.75,4,naive\n");
}

TEST_CASE("snapshot round trip is byte-identical") {
  auto env = make_env({{"type", "corridor"}});
  TrainerConfig cfg;
  cfg.max_iterations = 80;
  cfg.seed = 0;
  Trainer trainer(cfg, *env);
  trainer.train();
  Snapshot snap = Snapshot::from_trainer(trainer, corridor_json("natural", 80, 1));

  TempDir tmp;
  const auto p1 = tmp.path / "snap.json";
  const auto p2 = tmp.path / "snap2.json";
  snap.save(p1.string());
  Snapshot loaded = Snapshot::load(p1.string());
  loaded.save(p2.string());
  CHECK(slurp(p1) == slurp(p2));

  CHECK(loaded.iteration == trainer.iteration());
  CHECK(loaded.rules.size() == trainer.rules().size());
  CHECK(loaded.logits.size() == trainer.params().logits.size());
  for (Eigen::Index i = 0; i < loaded.logits.size(); ++i)
    CHECK(loaded.logits(i) == trainer.params().logits(i));
}

TEST_CASE("run_experiment writes per-seed files and a summary") {
  TempDir tmp;
  nlohmann::json j = corridor_json("naive", 60, 2);
  j["out_dir"] = tmp.path.string();
  ExperimentConfig cfg = parse_experiment_config(j);
  ExperimentResult result = run_experiment(cfg);
  REQUIRE(result.runs.size() == 2);
  const fs::path root = tmp.path / "corridor-test";
  for (int seed : {0, 1}) {
    const fs::path dir = root / std::to_string(seed);
    CHECK(fs::exists(dir / ("metrics_seed" + std::to_string(seed) + ".csv")));
    CHECK(fs::exists(dir / ("snapshot_seed" + std::to_string(seed) + ".json")));
    const std::string csv = slurp(dir / ("metrics_seed" + std::to_string(seed) + ".csv"));
    CHECK(csv.rfind("iter,e_t,r_int,r_ep,r_env,r_t,n_rules,updater\n", 0) == 0);
  }
  CHECK(fs::exists(root / "summary.csv"));
  CHECK(fs::exists(root / "runs.csv"));
  const std::string summary = slurp(root / "summary.csv");
  CHECK(summary.rfind("updater,median_iters_to_threshold,final_greedy_success_rate\n", 0) == 0);
}

TEST_CASE("identical experiment reruns reproduce the CSVs byte for byte") {
  TempDir a, b;
  nlohmann::json j = corridor_json("natural", 50, 2);
  for (const TempDir* dir : {&a, &b}) {
    nlohmann::json run = j;
    run["out_dir"] = dir->path.string();
    run_experiment(parse_experiment_config(run));
  }
  for (int seed : {0, 1}) {
    const std::string rel =
        "corridor-test/" + std::to_string(seed) + "/metrics_seed" + std::to_string(seed) + ".csv";
    CHECK(slurp(a.path / rel) == slurp(b.path / rel));
  }
  CHECK(slurp(a.path / "corridor-test/runs.csv") == slurp(b.path / "corridor-test/runs.csv"));
}

TEST_CASE("geometry dump emits the Laplacian, metric and spectra") {
  TempDir tmp;
  nlohmann::json j = corridor_json("natural", 40, 1);
  j["out_dir"] = tmp.path.string();
  run_experiment(parse_experiment_config(j), /*dump_geometry=*/true);
  const fs::path dir = tmp.path / "corridor-test" / "0";
  CHECK(fs::exists(dir / "geometry_L.csv"));
  CHECK(fs::exists(dir / "geometry_G.csv"));
  const std::string eigs = slurp(dir / "geometry_eigs.csv");
  CHECK(eigs.rfind("matrix,index,eigenvalue\n", 0) == 0);
}

TEST_CASE("snapshot evaluation: converged corridor policy solves in 3 steps") {
  TempDir tmp;
  nlohmann::json j = corridor_json("natural", 400, 1);
  j["out_dir"] = tmp.path.string();
  run_experiment(parse_experiment_config(j));
  const std::string snap =
      (tmp.path / "corridor-test" / "0" / "snapshot_seed0.json").string();
  SnapshotEval eval = evaluate_snapshot(snap, 10, /*greedy=*/true);
  CHECK_FALSE(eval.hash_mismatch);
  CHECK(eval.summary.success_rate == doctest::Approx(1.0));
  CHECK(eval.summary.mean_length == doctest::Approx(3.0));
  CHECK(eval.summary.mean_reward == doctest::Approx(1.0));
}

TEST_CASE("untrained snapshot under sampling matches the random baseline") {
  auto env = make_env({{"type", "corridor"}});
  TrainerConfig cfg;
  cfg.max_iterations = 0;
  Trainer trainer(cfg, *env);
  trainer.train();  // zero iterations: uniform seed rules

  auto eval_env = make_env({{"type", "corridor"}});
  const int episodes = 1500;
  EvalSummary sampled = evaluate_policy(trainer.rules(), trainer.params().logits,
                                        *eval_env, episodes, 77, /*greedy=*/false);
  auto base_env = make_env({{"type", "corridor"}});
  BaselineStats baseline = random_policy_baseline(*base_env, episodes, 91);
  // Both processes are uniform coin flips over two actions.
  const double sigma =
      std::sqrt(baseline.success_rate * (1.0 - baseline.success_rate) / episodes);
  CHECK(std::abs(sampled.success_rate - baseline.success_rate) <= 4.0 * sigma);

  EvalSummary none = evaluate_policy(trainer.rules(), trainer.params().logits,
                                     *eval_env, 0, 1);
  CHECK(none.episodes == 0);
  CHECK(none.mean_reward == 0.0);
}

TEST_CASE("compare_updaters needs two updaters and reports one row each") {
  TempDir tmp;
  nlohmann::json j = corridor_json("natural", 40, 1);
  j["out_dir"] = tmp.path.string();
  j["updaters"] = {"naive", "natural"};
  ExperimentConfig cfg = parse_experiment_config(j);
  auto rows = compare_updaters(cfg);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].updater == "naive");
  CHECK(rows[1].updater == "natural");
  CHECK(fs::exists(tmp.path / "corridor-test" / "compare.csv"));
  CHECK(fs::exists(tmp.path / "corridor-test" / "compare.txt"));
  const std::string table = compare_table_text(rows);
  CHECK(table.find("naive") != std::string::npos);
  CHECK(table.find("natural") != std::string::npos);

  nlohmann::json single = corridor_json("natural", 40, 1);
  single["updaters"] = {"natural"};
  CHECK_THROWS_AS(compare_updaters(parse_experiment_config(single)), Error);
}

TEST_CASE("three-way comparison on the feature world includes sickness rates") {
  TempDir tmp;
  nlohmann::json j = {
      {"name", "fw-test"},
      {"env", {{"type", "featureworld"}, {"max_steps", 60}}},
      {"trainer", {{"max_iterations", 60}}},
      {"repeat", 1},
      {"eval_episodes", 2},
      {"updaters", {"naive", "natural", "natural+airis"}},
      {"out_dir", tmp.path.string()},
  };
  auto rows = compare_updaters(parse_experiment_config(j));
  REQUIRE(rows.size() == 3);
  const std::string csv = slurp(tmp.path / "fw-test" / "compare.csv");
  CHECK(csv.rfind("updater,median_iters,iqr_iters,median_final_e,iqr_final_e,sickness_rate\n",
                  0) == 0);
}

TEST_CASE("cli binary: run and eval round trip with exit codes") {
  if (!fs::exists("actpc")) return;  // only when run from the build directory
  TempDir tmp;
  const fs::path cfg_path = tmp.path / "exp.json";
  nlohmann::json j = corridor_json("natural", 60, 1);
  j["out_dir"] = (tmp.path / "out").string();
  std::ofstream(cfg_path) << j.dump(2);
  const std::string base = "./actpc";
  CHECK(std::system((base + " run " + cfg_path.string() + " > /dev/null").c_str()) == 0);
  const fs::path snap = tmp.path / "out" / "corridor-test" / "0" / "snapshot_seed0.json";
  REQUIRE(fs::exists(snap));
  CHECK(std::system((base + " eval " + snap.string() + " --episodes 3 > /dev/null").c_str()) == 0);

  // Malformed config: exit status 2.
  const fs::path bad_path = tmp.path / "bad.json";
  nlohmann::json bad = corridor_json("natural", 10, 1);
  bad["trainer"]["windows"] = 3;
  std::ofstream(bad_path) << bad.dump(2);
  const int status = std::system((base + " run " + bad_path.string() + " 2> /dev/null").c_str());
  CHECK(WEXITSTATUS(status) == 2);
}
