#include "actpc/envs_impl.hpp"

#include <algorithm>
#include <numeric>

namespace actpc {

namespace {
const std::vector<std::string> kFeatureActions = {
    "Forward", "Backward", "TurnLeft", "TurnRight", "Grab", "Eat", "Wait"};
constexpr int kDx[4] = {0, 1, 0, -1};
constexpr int kDy[4] = {-1, 0, 1, 0};
const char* kHeadingNames[4] = {"N", "E", "S", "W"};
}  // namespace

std::string FeatureTuple::to_facts() const {
  return "(Color " + color + ") (Shape " + shape + ") (Tex " + texture + ")";
}

ItemClass FeatureWorldEnv::classify(const FeatureTuple& f) const {
  for (const ClassifierEntry& e : cfg_.classifier) {
    bool all = std::all_of(e.conjunction.begin(), e.conjunction.end(),
                           [&](const std::string& v) { return f.has(v); });
    if (all) return e.item_class;
  }
  return ItemClass::Neutral;
}

std::pair<int, int> FeatureWorldEnv::faced_cell() const {
  return {x_ + kDx[heading_], y_ + kDy[heading_]};
}

WorldState FeatureWorldEnv::observe() const {
  WorldState s({}, {"Facing", "SeesColor", "SeesShape", "SeesTex", "Hand",
                    "Digesting", "PosX", "PosY", "Heading", "Action"});
  auto [fx, fy] = faced_cell();
  if (!in_bounds(fx, fy)) {
    s.insert(Term::fact("Facing", "Wall"));
  } else if (grid_[idx(fx, fy)].occupied) {
    const FeatureTuple& it = grid_[idx(fx, fy)].item;
    s.insert(Term::fact("Facing", "Item"));
    s.insert(Term::fact("SeesColor", it.color));
    s.insert(Term::fact("SeesShape", it.shape));
    s.insert(Term::fact("SeesTex", it.texture));
  } else {
    s.insert(Term::fact("Facing", "Empty"));
  }
  s.insert(Term::fact("Hand", holding_ ? "Full" : "Empty"));
  s.insert(Term::fact("Digesting", pending_.empty() ? "0" : "1"));
  s.insert(Term::fact("PosX", std::to_string(x_)));
  s.insert(Term::fact("PosY", std::to_string(y_)));
  s.insert(Term::fact("Heading", kHeadingNames[heading_]));
  return s;
}

FeatureTuple FeatureWorldEnv::random_item() {
  auto pick = [&](const std::vector<std::string>& vals) {
    std::uniform_int_distribution<std::size_t> d(0, vals.size() - 1);
    return vals[d(rng_)];
  };
  return {pick(cfg_.colors), pick(cfg_.shapes), pick(cfg_.textures)};
}

void FeatureWorldEnv::spawn_item() {
  std::vector<int> empties;
  for (int i = 0; i < static_cast<int>(grid_.size()); ++i)
    if (!grid_[i].occupied && i != idx(x_, y_)) empties.push_back(i);
  if (empties.empty()) return;
  std::uniform_int_distribution<std::size_t> pick(0, empties.size() - 1);
  int cell = empties[pick(rng_)];
  grid_[cell].occupied = true;
  grid_[cell].item = random_item();
}

WorldState FeatureWorldEnv::reset(std::uint64_t seed) {
  if (cfg_.width < 2 || cfg_.height < 2) throw Error("featureworld: grid too small");
  if (cfg_.n_items >= cfg_.width * cfg_.height) throw Error("featureworld: n_items too large");
  if (cfg_.delay < 1) throw Error("featureworld: delay must be >= 1");
  rng_.seed(seed * 0x9e3779b97f4a7c15ull + 2);
  grid_.assign(cfg_.width * cfg_.height, {});
  std::uniform_int_distribution<int> px(0, cfg_.width - 1), py(0, cfg_.height - 1), h(0, 3);
  x_ = px(rng_);
  y_ = py(rng_);
  heading_ = h(rng_);
  for (int i = 0; i < cfg_.n_items; ++i) spawn_item();
  holding_ = false;
  pending_.clear();
  t_ = 0;
  done_ = false;
  total_reward_ = 0.0;
  sickness_events_ = 0;
  return observe();
}

StepResult FeatureWorldEnv::step(const std::string& action) {
  if (done_) throw Error("featureworld: step on a finished episode");
  StepResult res;
  bool moved_action = action == "Forward" || action == "Backward";

  if (moved_action) {
    int dir = action == "Forward" ? 1 : -1;
    int nx = x_ + dir * kDx[heading_];
    int ny = y_ + dir * kDy[heading_];
    if (in_bounds(nx, ny) && !grid_[idx(nx, ny)].occupied) {
      x_ = nx;
      y_ = ny;
    }
  } else if (action == "TurnLeft") {
    heading_ = (heading_ + 3) % 4;
  } else if (action == "TurnRight") {
    heading_ = (heading_ + 1) % 4;
  } else if (action == "Grab") {
    auto [fx, fy] = faced_cell();
    if (!holding_ && in_bounds(fx, fy) && grid_[idx(fx, fy)].occupied) {
      held_ = grid_[idx(fx, fy)].item;
      holding_ = true;
      grid_[idx(fx, fy)].occupied = false;
    }
  } else if (action == "Eat") {
    FeatureTuple item;
    bool have = false;
    auto [fx, fy] = faced_cell();
    if (in_bounds(fx, fy) && grid_[idx(fx, fy)].occupied) {
      item = grid_[idx(fx, fy)].item;
      grid_[idx(fx, fy)].occupied = false;
      have = true;
    } else if (holding_) {
      item = held_;
      holding_ = false;
      have = true;
    }
    if (have) {
      ItemClass cls = classify(item);
      res.info["ingestion"] = item.to_facts();
      if (cls == ItemClass::Food) {
        res.reward += 1.0;
      } else if (cls == ItemClass::Poison) {
        res.reward += -1.0;
      } else if (cls == ItemClass::Conditional || cls == ItemClass::Delayed) {
        pending_.push_back({item, cls, t_, 0, 0});
      }
      spawn_item();  // keep item density constant
    }
  } else if (action != "Wait") {
    throw Error("featureworld: unknown action " + action);
  }

  // Delayed effects resolve exactly `delay` steps after ingestion.
  for (auto it = pending_.begin(); it != pending_.end();) {
    it->elapsed += 1;
    if (moved_action) it->moves += 1;
    if (it->elapsed == cfg_.delay) {
      double move_frac = static_cast<double>(it->moves) / cfg_.delay;
      bool sick = it->item_class == ItemClass::Delayed || move_frac < cfg_.activity;
      if (sick) {
        res.reward += -1.0;
        res.info["effect"] = "sickness";
        ++sickness_events_;
      } else {
        res.reward += 1.0;
        res.info["effect"] = "benefit";
      }
      res.info["effect_item"] = it->item.to_facts();
      it = pending_.erase(it);
    } else {
      ++it;
    }
  }

  total_reward_ += res.reward;
  ++t_;
  if (t_ >= cfg_.max_steps) done_ = true;
  res.observation = observe();
  res.done = done_;
  return res;
}

const std::vector<std::string>& FeatureWorldEnv::actions() const {
  return kFeatureActions;
}

std::vector<RewriteRule> FeatureWorldEnv::seed_rules() const {
  std::vector<RewriteRule> rules;
  for (const std::string& a : kFeatureActions) {
    Pattern lhs{{Term::node("Facing", {Term::variable("c")})}};
    Pattern rhs{{Term::node("Facing", {Term::variable("c")}),
                 Term::fact("Action", a)}};
    rules.emplace_back(std::move(lhs), std::move(rhs), RuleOrigin::Seed);
  }
  return rules;
}

}  // namespace actpc
