#include "actpc/env.hpp"

#include "actpc/envs_impl.hpp"

namespace actpc {

namespace {

using nlohmann::json;

template <typename T>
T get_or(const json& j, const std::string& key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw Error("invalid value for env config key '" + key + "'");
  }
}

ItemClass item_class_from_string(const std::string& s) {
  if (s == "food") return ItemClass::Food;
  if (s == "poison") return ItemClass::Poison;
  if (s == "neutral") return ItemClass::Neutral;
  if (s == "conditional") return ItemClass::Conditional;
  if (s == "delayed") return ItemClass::Delayed;
  throw Error("unknown item class '" + s + "'");
}

}  // namespace

std::unique_ptr<Env> make_env(const json& config) {
  if (!config.contains("type")) throw Error("env config missing key 'type'");
  const std::string type = config.at("type").get<std::string>();
  if (type == "corridor") {
    return std::make_unique<CorridorEnv>(get_or(config, "episodic", true),
                                         get_or(config, "max_steps", 20));
  }
  if (type == "buggrid") {
    BugGridConfig cfg;
    cfg.width = get_or(config, "width", cfg.width);
    cfg.height = get_or(config, "height", cfg.height);
    cfg.food = get_or(config, "food", cfg.food);
    cfg.poison = get_or(config, "poison", cfg.poison);
    cfg.neutral = get_or(config, "neutral", cfg.neutral);
    cfg.respawn = get_or(config, "respawn", cfg.respawn);
    cfg.max_steps = get_or(config, "max_steps", cfg.max_steps);
    return std::make_unique<BugGridEnv>(cfg);
  }
  if (type == "featureworld") {
    FeatureWorldConfig cfg;
    cfg.width = get_or(config, "width", cfg.width);
    cfg.height = get_or(config, "height", cfg.height);
    cfg.n_items = get_or(config, "n_items", cfg.n_items);
    cfg.delay = get_or(config, "delay", cfg.delay);
    cfg.activity = get_or(config, "activity", cfg.activity);
    cfg.max_steps = get_or(config, "max_steps", cfg.max_steps);
    if (config.contains("classifier")) {
      cfg.classifier.clear();
      for (const auto& entry : config.at("classifier")) {
        ClassifierEntry e;
        e.conjunction = entry.at("features").get<std::vector<std::string>>();
        e.item_class = item_class_from_string(entry.at("class").get<std::string>());
        cfg.classifier.push_back(std::move(e));
      }
    }
    return std::make_unique<FeatureWorldEnv>(cfg);
  }
  throw Error("unknown env type '" + type + "'");
}

BaselineStats random_policy_baseline(Env& env, int episodes, std::uint64_t seed) {
  if (episodes < 0) throw Error("random_policy_baseline: episodes must be >= 0");
  BaselineStats stats;
  stats.episodes = episodes;
  if (episodes == 0) return stats;
  Rng rng(seed * 0x9e3779b97f4a7c15ull + 3);
  const auto& actions = env.actions();
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  long total_steps = 0;
  long sick = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    env.reset(seed + static_cast<std::uint64_t>(ep));
    double total = 0.0;
    while (!env.done()) {
      StepResult r = env.step(actions[pick(rng)]);
      total += r.reward;
      ++total_steps;
      if (auto it = r.info.find("effect"); it != r.info.end() && it->second == "sickness")
        ++sick;
    }
    stats.mean_reward += total;
    stats.success_rate += env.success() ? 1.0 : 0.0;
    stats.mean_length += static_cast<double>(env.steps());
  }
  stats.mean_reward /= episodes;
  stats.success_rate /= episodes;
  stats.mean_length /= episodes;
  stats.sickness_per_step =
      total_steps > 0 ? static_cast<double>(sick) / static_cast<double>(total_steps) : 0.0;
  return stats;
}

}  // namespace actpc
