#include "actpc/envs_impl.hpp"

namespace actpc {

namespace {
const std::vector<std::string> kCorridorActions = {"Right", "Left"};
}

WorldState CorridorEnv::observe() const {
  WorldState s({Term::fact("State", std::to_string(state_))},
               {"State", "Action"});
  return s;
}

WorldState CorridorEnv::reset(std::uint64_t) {
  state_ = 0;  // the agent always starts at cell 0
  t_ = 0;
  done_ = false;
  reached_goal_ = false;
  return observe();
}

StepResult CorridorEnv::step(const std::string& action) {
  if (done_) throw Error("corridor: step on a finished episode");
  int next = state_;
  if (action == "Right") {
    next = std::min(3, state_ + 1);
  } else if (action == "Left") {
    next = std::max(0, state_ - 1);  // Left at 0 keeps the agent in place
  } else {
    throw Error("corridor: unknown action " + action);
  }
  StepResult res;
  res.reward = (next == 3 && state_ != 3) ? 1.0 : 0.0;
  if (res.reward > 0.0) reached_goal_ = true;
  state_ = next;
  ++t_;
  if (episodic_ && (state_ == 3 || t_ >= max_steps_)) done_ = true;
  res.observation = observe();
  res.done = done_;
  return res;
}

const std::vector<std::string>& CorridorEnv::actions() const {
  return kCorridorActions;
}

std::vector<RewriteRule> CorridorEnv::seed_rules() const {
  std::vector<RewriteRule> rules;
  for (const std::string& a : kCorridorActions) {
    Pattern lhs{{Term::node("State", {Term::variable("s")})}};
    Pattern rhs{{Term::node("State", {Term::variable("s")}),
                 Term::fact("Action", a)}};
    rules.emplace_back(std::move(lhs), std::move(rhs), RuleOrigin::Seed);
  }
  return rules;
}

}  // namespace actpc
