#include "actpc/airis.hpp"

#include <algorithm>
#include <cmath>
#include <queue>

namespace actpc {

std::string to_string(TemporalCondition::Activity a) {
  return a == TemporalCondition::Activity::MostlyMoving ? "mostly-moving"
                                                        : "mostly-still";
}

namespace {

std::string facts_sexpr(const std::vector<Term>& facts) {
  std::string out;
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (i) out += ' ';
    out += to_string(facts[i]);
  }
  return out;
}

std::vector<Term> sorted_facts(std::vector<Term> facts) {
  std::sort(facts.begin(), facts.end());
  return facts;
}

std::string level_str(double level) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", level);
  return buf;
}

}  // namespace

bool CausalRule::matches(const WorldState& state, const std::string& act) const {
  if (temporal) return false;
  if (action != act) return false;
  return std::all_of(conditions.begin(), conditions.end(),
                     [&](const Term& c) { return state.contains(c); });
}

WorldState CausalRule::apply_effect(const WorldState& state) const {
  WorldState out = state;
  for (const Term& f : effect) out.insert(f);
  return out;
}

std::string CausalRule::id() const {
  std::string out = "(Causal (conditions " + facts_sexpr(conditions) + ")";
  out += " (action " + (action.empty() ? "-" : action) + ")";
  out += " (effect " + facts_sexpr(effect) + ")";
  if (temporal) {
    out += " (temporal (features " + facts_sexpr(temporal->trigger_features) + ")";
    out += " (delay " + std::to_string(temporal->delay) + ")";
    out += " (activity " + to_string(temporal->activity) + ")";
    out += " (level " + level_str(temporal->level) + ")";
    out += " (outcome " + temporal->effect + "))";
  }
  out += ")";
  return out;
}

std::string CausalRule::to_sexpr() const {
  std::string base = id();
  base.pop_back();  // reopen the closing paren
  base += " (confidence " + std::to_string(successes) + " " +
          std::to_string(trials) + "))";
  return base;
}

CausalRule parse_causal_rule(const std::string& text) {
  Term t = parse_term(text);
  if (t.label != "Causal") throw Error("expected (Causal ...): " + text);
  CausalRule rule;
  for (const Term& part : t.children) {
    if (part.label == "conditions") {
      rule.conditions = part.children;
    } else if (part.label == "action") {
      if (part.children.size() != 1) throw Error("bad (action ...) clause");
      rule.action = part.children[0].label;
      if (rule.action == "-") rule.action.clear();
    } else if (part.label == "effect") {
      rule.effect = part.children;
    } else if (part.label == "confidence") {
      if (part.children.size() != 2) throw Error("bad (confidence ...) clause");
      rule.successes = std::stol(part.children[0].label);
      rule.trials = std::stol(part.children[1].label);
    } else if (part.label == "temporal") {
      TemporalCondition tc;
      for (const Term& clause : part.children) {
        if (clause.label == "features") tc.trigger_features = clause.children;
        else if (clause.label == "delay") tc.delay = std::stoi(clause.children[0].label);
        else if (clause.label == "activity")
          tc.activity = clause.children[0].label == "mostly-moving"
                            ? TemporalCondition::Activity::MostlyMoving
                            : TemporalCondition::Activity::MostlyStill;
        else if (clause.label == "level") tc.level = std::stod(clause.children[0].label);
        else if (clause.label == "outcome") tc.effect = clause.children[0].label;
      }
      rule.temporal = std::move(tc);
    }
  }
  if (rule.trials < rule.successes || rule.successes < 0)
    throw Error("bad confidence counts in causal rule");
  return rule;
}

CausalRule induce_rule(const Transition3& tr) {
  CausalRule rule;
  rule.conditions = tr.state.facts();
  for (const Term& f : tr.next.facts())
    if (!tr.state.contains(f)) rule.effect.push_back(f);
  rule.effect = sorted_facts(std::move(rule.effect));
  rule.action = tr.action;
  rule.successes = rule.trials = 1;
  return rule;
}

namespace {

bool effect_observed(const CausalRule& rule, const Transition3& tr) {
  if (rule.effect.empty()) return tr.next.facts() == tr.state.facts();
  return std::all_of(rule.effect.begin(), rule.effect.end(),
                     [&](const Term& f) { return tr.next.contains(f); });
}

}  // namespace

CausalRule update_confidence(const CausalRule& rule, const Transition3& tr) {
  if (!rule.matches(tr.state, tr.action))
    throw Error("update_confidence: transition does not match rule");
  CausalRule out = rule;
  out.trials += 1;
  if (effect_observed(rule, tr)) out.successes += 1;
  return out;
}

std::optional<CausalRule> refine_rule(const CausalRule& rule,
                                      const std::vector<WorldState>& positives,
                                      const Transition3& counterexample) {
  // Candidate discriminators: facts present in some positive but not in the
  // counterexample state.
  std::map<std::string, std::pair<Term, int>> candidates;  // serialized -> (fact, coverage)
  for (const WorldState& pos : positives) {
    for (const Term& f : pos.facts()) {
      if (counterexample.state.contains(f)) continue;
      auto& entry = candidates[to_string(f)];
      entry.first = f;
      entry.second += 1;
    }
  }
  if (candidates.empty()) return std::nullopt;

  const double n_pos = static_cast<double>(positives.size());
  const double n_total = n_pos + 1.0;
  auto h = [](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return -p * std::log(p) - (1 - p) * std::log(1 - p);
  };
  const double h_total = h(n_pos / n_total);

  std::string best_key;
  Term best_fact;
  double best_gain = -1.0;
  for (const auto& [key, entry] : candidates) {
    const double covered = entry.second;  // positives containing the fact
    // Branch with the fact holds only positives; branch without holds the
    // remaining positives plus the counterexample.
    const double rest = n_pos - covered + 1.0;
    const double gain =
        h_total - (rest / n_total) * h((n_pos - covered) / rest);
    if (gain > best_gain || (gain == best_gain && key < best_key)) {
      best_gain = gain;
      best_key = key;
      best_fact = entry.first;
    }
  }

  CausalRule refined = rule;
  refined.conditions.push_back(best_fact);
  refined.conditions = sorted_facts(std::move(refined.conditions));
  const long covered = candidates[best_key].second;
  refined.successes = refined.trials = std::max<long>(covered, 1);
  return refined;
}

double NextStatePrediction::fact_probability(const Term& fact) const {
  double p = 0.0;
  for (const auto& [state, prob] : outcomes)
    if (state.contains(fact)) p += prob;
  return p;
}

NextStatePrediction predict_next(const std::vector<CausalRule>& rules,
                                 const WorldState& state,
                                 const std::string& action) {
  NextStatePrediction pred;
  double z = 0.0;
  for (const CausalRule& r : rules) {
    if (!r.matches(state, action)) continue;
    const double w = r.confidence() + 1e-6;
    pred.outcomes.emplace_back(r.apply_effect(state), w);
    z += w;
  }
  for (auto& [s, w] : pred.outcomes) w /= z;
  return pred;
}

std::optional<std::vector<Term>> detect_discrepancy(
    const NextStatePrediction& predicted, const WorldState& observed_next,
    double threshold) {
  if (predicted.empty()) throw Error("detect_discrepancy: empty prediction");
  std::vector<Term> diff;
  for (const Term& f : observed_next.facts())
    if (predicted.fact_probability(f) < threshold) diff.push_back(f);
  if (diff.empty()) return std::nullopt;
  return diff;
}

void EventLog::log_action(long t, bool is_move) {
  actions_.emplace_back(t, is_move);
  trim(t);
}

void EventLog::log_ingestion(long t, std::vector<Term> features) {
  ingestions_.push_back({t, sorted_facts(std::move(features))});
  trim(t);
}

void EventLog::log_effect(long t, std::string) { trim(t); }

void EventLog::trim(long now) {
  const long cutoff = now - static_cast<long>(retention_);
  while (!actions_.empty() && actions_.front().first < cutoff) actions_.pop_front();
  while (!ingestions_.empty() && ingestions_.front().t < cutoff) ingestions_.pop_front();
}

double EventLog::move_fraction(long t0, int span) const {
  if (span <= 0) return 0.0;
  int moves = 0;
  for (const auto& [t, is_move] : actions_)
    if (t > t0 && t <= t0 + span && is_move) ++moves;
  return static_cast<double>(moves) / static_cast<double>(span);
}

std::vector<CausalRule> attribute_delayed(const EventLog& log,
                                          const EventLog::Effect& effect,
                                          int max_lag, double activity_level) {
  std::vector<CausalRule> out;
  std::set<std::string> seen;
  for (const EventLog::Ingestion& ing : log.ingestions()) {
    const long lag = effect.t - ing.t;
    if (lag < 1 || lag > max_lag) continue;
    for (int delay = static_cast<int>(lag) - 2; delay <= static_cast<int>(lag) + 2; ++delay) {
      if (delay < 1) continue;
      for (auto activity : {TemporalCondition::Activity::MostlyStill,
                            TemporalCondition::Activity::MostlyMoving}) {
        CausalRule rule;
        rule.effect = {Term::fact("Effect", effect.kind)};
        rule.temporal = TemporalCondition{ing.features, delay, activity,
                                          activity_level, effect.kind};
        rule.successes = rule.trials = 0;
        if (seen.insert(rule.id()).second) out.push_back(std::move(rule));
      }
    }
  }
  return out;
}

std::optional<std::vector<std::string>> plan(
    const std::vector<CausalRule>& rules, const WorldState& state,
    const std::function<bool(const WorldState&)>& goal, int horizon) {
  if (rules.empty()) throw Error("plan: empty rule set");
  if (goal(state)) return std::vector<std::string>{};

  struct Node {
    WorldState state;
    std::vector<std::string> actions;
  };
  std::queue<Node> frontier;
  std::set<std::string> visited{state.digest()};
  frontier.push({state, {}});

  while (!frontier.empty()) {
    Node node = std::move(frontier.front());
    frontier.pop();
    if (static_cast<int>(node.actions.size()) >= horizon) continue;
    for (const CausalRule& r : rules) {
      if (r.temporal || r.confidence() < 0.5) continue;
      if (!r.matches(node.state, r.action)) continue;
      WorldState next = r.apply_effect(node.state);
      if (!visited.insert(next.digest()).second) continue;
      Node child{std::move(next), node.actions};
      child.actions.push_back(r.action);
      if (goal(child.state)) return child.actions;
      frontier.push(std::move(child));
    }
  }
  return std::nullopt;
}

void AirisEngine::add_rule(CausalRule rule) {
  const std::string key = rule.id();
  if (index_.count(key)) return;  // already known; counting handles the rest
  index_[key] = rules_.size();
  rules_.push_back(std::move(rule));
}

void AirisEngine::check_temporal(long t, bool effect_now, const std::string& effect_kind) {
  for (CausalRule& r : rules_) {
    if (!r.temporal) continue;
    const TemporalCondition& tc = *r.temporal;
    for (const EventLog::Ingestion& ing : log_.ingestions()) {
      if (ing.t + tc.delay != t) continue;
      bool features_ok = std::all_of(
          tc.trigger_features.begin(), tc.trigger_features.end(),
          [&](const Term& f) {
            return std::find(ing.features.begin(), ing.features.end(), f) !=
                   ing.features.end();
          });
      if (!features_ok) continue;
      const double frac = log_.move_fraction(ing.t, tc.delay);
      const bool moving = frac >= tc.level;
      if (moving != (tc.activity == TemporalCondition::Activity::MostlyMoving))
        continue;
      r.trials += 1;
      if (effect_now && effect_kind == tc.effect) r.successes += 1;
    }
  }
}

void AirisEngine::observe(const WorldState& state, const std::string& action,
                          const WorldState& next,
                          const std::map<std::string, std::string>& info, long t) {
  const bool is_move = action == "Forward" || action == "Backward";
  log_.log_action(t, is_move);

  bool effect_now = false;
  std::string effect_kind;
  if (auto it = info.find("effect"); it != info.end()) {
    effect_now = true;
    effect_kind = it->second;
    log_.log_effect(t, effect_kind);
  }

  // Temporal rules are checked before this step's ingestion is logged: an
  // ingestion cannot explain an effect at its own timestamp.
  check_temporal(t, effect_now, effect_kind);

  if (auto it = info.find("ingestion"); it != info.end())
    log_.log_ingestion(t, parse_terms(it->second));

  if (effect_now) {
    for (CausalRule& cand :
         attribute_delayed(log_, {t, effect_kind}, cfg_.max_lag, cfg_.activity_level))
      add_rule(std::move(cand));
  }

  // Confidence counting over matching action rules.
  Transition3 tr{state, action, next};
  for (CausalRule& r : rules_) {
    if (!r.matches(state, action)) continue;
    CausalRule updated = update_confidence(r, tr);
    const bool success = updated.successes > r.successes;
    r = std::move(updated);
    if (success) {
      auto& pos = positives_[r.id()];
      pos.push_back(state);
      if (pos.size() > cfg_.max_positives) pos.erase(pos.begin());
    }
  }

  // Discrepancy-driven creation and refinement.
  NextStatePrediction pred = predict_next(rules_, state, action);
  if (pred.empty()) {
    add_rule(induce_rule(tr));
    return;
  }
  auto diff = detect_discrepancy(pred, next, cfg_.discrepancy_threshold);
  if (!diff) return;

  // Refine the most-trialed matching rule whose effect failed here.
  CausalRule* worst = nullptr;
  for (CausalRule& r : rules_) {
    if (!r.matches(state, action) || effect_observed(r, tr)) continue;
    if (!worst || r.trials > worst->trials) worst = &r;
  }
  if (worst) {
    auto it = positives_.find(worst->id());
    if (it != positives_.end() && !it->second.empty()) {
      if (auto refined = refine_rule(*worst, it->second, tr)) {
        positives_.erase(worst->id());
        index_.erase(worst->id());
        *worst = std::move(*refined);
        index_[worst->id()] = static_cast<std::size_t>(worst - rules_.data());
      }
    }
  }
  add_rule(induce_rule(tr));
}

}  // namespace actpc
