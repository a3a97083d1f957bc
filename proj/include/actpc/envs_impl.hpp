#pragma once

// Concrete environments. Kept in one header so tests can poke at their
// internals; construction goes through make_env for everything else.

#include <array>

#include "actpc/env.hpp"

namespace actpc {

/// 1D corridor of cells 0..3. Right moves +1, Left moves -1 floored at 0,
/// +1 reward on reaching cell 3. Non-episodic mode keeps stepping (cell 3
/// clamps), which exposes the full transition table to random walks.
class CorridorEnv : public Env {
 public:
  explicit CorridorEnv(bool episodic = true, int max_steps = 20)
      : episodic_(episodic), max_steps_(max_steps) {}

  std::string name() const override { return "corridor"; }
  WorldState reset(std::uint64_t seed) override;
  StepResult step(const std::string& action) override;
  const std::vector<std::string>& actions() const override;
  std::vector<std::string> context_slots() const override { return {"State"}; }
  std::vector<RewriteRule> seed_rules() const override;
  bool done() const override { return done_; }
  long steps() const override { return t_; }
  bool success() const override { return reached_goal_; }

  int state() const { return state_; }

 private:
  WorldState observe() const;

  bool episodic_;
  int max_steps_;
  int state_ = 0;
  long t_ = 0;
  bool done_ = false;
  bool reached_goal_ = false;
};

struct BugGridConfig {
  int width = 8;
  int height = 8;
  int food = 6;
  int poison = 3;
  int neutral = 3;
  bool respawn = true;
  int max_steps = 200;
};

/// 2D grid bug with pose kinematics. Grab collects the faced item:
/// +1 food, -1 poison, 0 neutral.
class BugGridEnv : public Env {
 public:
  explicit BugGridEnv(BugGridConfig cfg = {}) : cfg_(cfg) {}

  std::string name() const override { return "buggrid"; }
  WorldState reset(std::uint64_t seed) override;
  StepResult step(const std::string& action) override;
  const std::vector<std::string>& actions() const override;
  std::vector<std::string> context_slots() const override {
    return {"Facing", "Hand"};
  }
  std::vector<RewriteRule> seed_rules() const override;
  bool done() const override { return done_; }
  long steps() const override { return t_; }
  bool success() const override { return total_reward_ > 0.0; }

  enum class Item { None, Food, Poison, Neutral };
  Item item_at(int x, int y) const { return grid_[idx(x, y)]; }
  int count_items(Item kind) const;
  double total_reward() const { return total_reward_; }

 private:
  int idx(int x, int y) const { return y * cfg_.width + x; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < cfg_.width && y >= 0 && y < cfg_.height;
  }
  std::pair<int, int> faced_cell() const;
  WorldState observe() const;
  void spawn(Item kind);

  BugGridConfig cfg_;
  std::vector<Item> grid_;
  int x_ = 0, y_ = 0, heading_ = 0;  // heading: 0=N 1=E 2=S 3=W
  long t_ = 0;
  bool done_ = false;
  double total_reward_ = 0.0;
  Rng rng_;
};

enum class ItemClass { Food, Poison, Neutral, Conditional, Delayed };

struct FeatureTuple {
  std::string color, shape, texture;
  bool has(const std::string& v) const {
    return color == v || shape == v || texture == v;
  }
  std::string to_facts() const;
};

struct ClassifierEntry {
  std::vector<std::string> conjunction;  // feature values that must be present
  ItemClass item_class = ItemClass::Neutral;
};

struct FeatureWorldConfig {
  int width = 7;
  int height = 7;
  int n_items = 10;
  int delay = 10;          // N: steps between ingestion and delayed effect
  double activity = 0.5;   // X: move-action fraction separating outcomes
  int max_steps = 500;
  std::vector<std::string> colors = {"Red", "Green", "Blue"};
  std::vector<std::string> shapes = {"Round", "Square"};
  std::vector<std::string> textures = {"Smooth", "Rough"};
  std::vector<ClassifierEntry> classifier = {
      {{"Red", "Round", "Smooth"}, ItemClass::Food},
      {{"Green", "Square", "Rough"}, ItemClass::Poison},
      {{"Blue", "Round"}, ItemClass::Conditional},
  };  // first match wins; anything else is neutral
};

/// Grid world whose items carry feature tuples; what an item does is a
/// function of its feature conjunction. Eating a conditional item resolves
/// exactly `delay` steps later: sickness (-1) when the move-action fraction
/// since ingestion stayed below `activity`, benefit (+1) otherwise.
class FeatureWorldEnv : public Env {
 public:
  explicit FeatureWorldEnv(FeatureWorldConfig cfg = {}) : cfg_(cfg) {}

  std::string name() const override { return "featureworld"; }
  WorldState reset(std::uint64_t seed) override;
  StepResult step(const std::string& action) override;
  const std::vector<std::string>& actions() const override;
  std::vector<std::string> context_slots() const override {
    return {"Facing", "SeesColor", "SeesShape", "SeesTex", "Digesting"};
  }
  std::vector<RewriteRule> seed_rules() const override;
  bool done() const override { return done_; }
  long steps() const override { return t_; }
  bool success() const override { return total_reward_ > 0.0; }

  ItemClass classify(const FeatureTuple& f) const;
  int sickness_events() const { return sickness_events_; }
  const FeatureWorldConfig& config() const { return cfg_; }

 private:
  struct Cell {
    bool occupied = false;
    FeatureTuple item;
  };
  struct Pending {
    FeatureTuple item;
    ItemClass item_class;
    long t0 = 0;
    int moves = 0;
    int elapsed = 0;
  };

  int idx(int x, int y) const { return y * cfg_.width + x; }
  bool in_bounds(int x, int y) const {
    return x >= 0 && x < cfg_.width && y >= 0 && y < cfg_.height;
  }
  std::pair<int, int> faced_cell() const;
  WorldState observe() const;
  FeatureTuple random_item();
  void spawn_item();

  FeatureWorldConfig cfg_;
  std::vector<Cell> grid_;
  int x_ = 0, y_ = 0, heading_ = 0;
  bool holding_ = false;
  FeatureTuple held_;
  std::vector<Pending> pending_;
  long t_ = 0;
  bool done_ = false;
  double total_reward_ = 0.0;
  int sickness_events_ = 0;
  Rng rng_;
};

}  // namespace actpc
