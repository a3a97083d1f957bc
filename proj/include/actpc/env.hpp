#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "actpc/generate.hpp"
#include "actpc/rule.hpp"

namespace actpc {

struct StepResult {
  WorldState observation;
  double reward = 0.0;
  bool done = false;
  /// Event annotations (ingestion features, sickness onset, ...).
  std::map<std::string, std::string> info;
};

/// Benchmark environment behind a reset/step interface. Deterministic under
/// (config, seed, action sequence).
class Env {
 public:
  virtual ~Env() = default;

  virtual std::string name() const = 0;
  virtual WorldState reset(std::uint64_t seed) = 0;
  /// Throws Error when stepping a finished episode (harness bug).
  virtual StepResult step(const std::string& action) = 0;

  virtual const std::vector<std::string>& actions() const = 0;
  /// Fact labels that form the outcome-pattern context for this env.
  virtual std::vector<std::string> context_slots() const = 0;
  /// Generic initial rules, one per action (also used for cold starts).
  virtual std::vector<RewriteRule> seed_rules() const = 0;

  virtual bool done() const = 0;
  virtual long steps() const = 0;
  /// Episode-level success notion (goal reached / positive return).
  virtual bool success() const = 0;
};

/// Builds an env from its JSON config section; throws Error with the
/// offending key on invalid input.
std::unique_ptr<Env> make_env(const nlohmann::json& config);

struct BaselineStats {
  double mean_reward = 0.0;
  double success_rate = 0.0;
  double mean_length = 0.0;
  double sickness_per_step = 0.0;
  int episodes = 0;
};

/// Uniform-random policy over env.actions(); deterministic under seed.
BaselineStats random_policy_baseline(Env& env, int episodes, std::uint64_t seed);

}  // namespace actpc
