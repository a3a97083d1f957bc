#include "actpc/envs_impl.hpp"

#include <algorithm>
#include <numeric>

namespace actpc {

namespace {
const std::vector<std::string> kBugActions = {"Forward", "Backward", "TurnLeft",
                                              "TurnRight", "Grab"};
constexpr int kDx[4] = {0, 1, 0, -1};  // N E S W
constexpr int kDy[4] = {-1, 0, 1, 0};
const char* kHeadingNames[4] = {"N", "E", "S", "W"};

std::string item_name(BugGridEnv::Item it) {
  switch (it) {
    case BugGridEnv::Item::Food: return "Food";
    case BugGridEnv::Item::Poison: return "Poison";
    case BugGridEnv::Item::Neutral: return "Neutral";
    case BugGridEnv::Item::None: return "Empty";
  }
  return "Empty";
}

}  // namespace

std::pair<int, int> BugGridEnv::faced_cell() const {
  return {x_ + kDx[heading_], y_ + kDy[heading_]};
}

int BugGridEnv::count_items(Item kind) const {
  return static_cast<int>(std::count(grid_.begin(), grid_.end(), kind));
}

WorldState BugGridEnv::observe() const {
  WorldState s({}, {"Facing", "Hand", "PosX", "PosY", "Heading", "Action"});
  auto [fx, fy] = faced_cell();
  std::string facing = in_bounds(fx, fy) ? item_name(grid_[idx(fx, fy)]) : "Wall";
  s.insert(Term::fact("Facing", facing));
  s.insert(Term::fact("Hand", "Empty"));
  s.insert(Term::fact("PosX", std::to_string(x_)));
  s.insert(Term::fact("PosY", std::to_string(y_)));
  s.insert(Term::fact("Heading", kHeadingNames[heading_]));
  return s;
}

void BugGridEnv::spawn(Item kind) {
  std::vector<int> empties;
  for (int i = 0; i < static_cast<int>(grid_.size()); ++i)
    if (grid_[i] == Item::None && i != idx(x_, y_)) empties.push_back(i);
  if (empties.empty()) return;
  std::uniform_int_distribution<std::size_t> pick(0, empties.size() - 1);
  grid_[empties[pick(rng_)]] = kind;
}

WorldState BugGridEnv::reset(std::uint64_t seed) {
  if (cfg_.width < 2 || cfg_.height < 2) throw Error("buggrid: grid too small");
  if (cfg_.food + cfg_.poison + cfg_.neutral >= cfg_.width * cfg_.height)
    throw Error("buggrid: too many items for the grid");
  rng_.seed(seed * 0x9e3779b97f4a7c15ull + 1);
  grid_.assign(cfg_.width * cfg_.height, Item::None);
  std::vector<int> cells(grid_.size());
  std::iota(cells.begin(), cells.end(), 0);
  std::shuffle(cells.begin(), cells.end(), rng_);
  int c = 0;
  for (int i = 0; i < cfg_.food; ++i) grid_[cells[c++]] = Item::Food;
  for (int i = 0; i < cfg_.poison; ++i) grid_[cells[c++]] = Item::Poison;
  for (int i = 0; i < cfg_.neutral; ++i) grid_[cells[c++]] = Item::Neutral;
  int start = cells[c++];
  x_ = start % cfg_.width;
  y_ = start / cfg_.width;
  std::uniform_int_distribution<int> h(0, 3);
  heading_ = h(rng_);
  t_ = 0;
  done_ = false;
  total_reward_ = 0.0;
  return observe();
}

StepResult BugGridEnv::step(const std::string& action) {
  if (done_) throw Error("buggrid: step on a finished episode");
  StepResult res;
  if (action == "Forward" || action == "Backward") {
    int dir = action == "Forward" ? 1 : -1;
    int nx = x_ + dir * kDx[heading_];
    int ny = y_ + dir * kDy[heading_];
    if (in_bounds(nx, ny) && grid_[idx(nx, ny)] == Item::None) {
      x_ = nx;
      y_ = ny;
    }
  } else if (action == "TurnLeft") {
    heading_ = (heading_ + 3) % 4;
  } else if (action == "TurnRight") {
    heading_ = (heading_ + 1) % 4;
  } else if (action == "Grab") {
    auto [fx, fy] = faced_cell();
    if (in_bounds(fx, fy) && grid_[idx(fx, fy)] != Item::None) {
      Item it = grid_[idx(fx, fy)];
      grid_[idx(fx, fy)] = Item::None;
      res.reward = it == Item::Food ? 1.0 : it == Item::Poison ? -1.0 : 0.0;
      res.info["grabbed"] = item_name(it);
      if (cfg_.respawn) spawn(it);
    }
  } else {
    throw Error("buggrid: unknown action " + action);
  }
  total_reward_ += res.reward;
  ++t_;
  if (t_ >= cfg_.max_steps) done_ = true;
  res.observation = observe();
  res.done = done_;
  return res;
}

const std::vector<std::string>& BugGridEnv::actions() const { return kBugActions; }

std::vector<RewriteRule> BugGridEnv::seed_rules() const {
  std::vector<RewriteRule> rules;
  for (const std::string& a : kBugActions) {
    Pattern lhs{{Term::node("Facing", {Term::variable("c")})}};
    Pattern rhs{{Term::node("Facing", {Term::variable("c")}),
                 Term::fact("Action", a)}};
    rules.emplace_back(std::move(lhs), std::move(rhs), RuleOrigin::Seed);
  }
  return rules;
}

}  // namespace actpc
