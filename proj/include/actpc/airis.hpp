#pragma once

#include <deque>
#include <optional>

#include "actpc/belief.hpp"
#include "actpc/rule.hpp"

namespace actpc {

/// Temporal clause of a causal rule: "ate an item with these features, and
/// after `delay` steps, with the activity predicate holding over that
/// window, the effect fires."
struct TemporalCondition {
  enum class Activity { MostlyMoving, MostlyStill };

  std::vector<Term> trigger_features;  // e.g. (Color Blue) (Shape Round) (Tex Rough)
  int delay = 1;                       // T threshold, >= 1
  Activity activity = Activity::MostlyStill;
  double level = 0.5;                  // move-action fraction separating the predicates
  std::string effect;                  // "sickness" or "benefit"
};

std::string to_string(TemporalCondition::Activity a);

/// IF {conditions} AND ACTION=a => NEXT_STATE effect, with confidence
/// bookkeeping. Temporal rules carry no action; their conditions live in the
/// TemporalCondition instead.
struct CausalRule {
  std::vector<Term> conditions;  // ground facts, subset semantics
  std::string action;
  std::vector<Term> effect;      // facts that change (empty: identity)
  long successes = 0;
  long trials = 0;
  std::optional<TemporalCondition> temporal;

  double confidence() const {
    return trials > 0 ? static_cast<double>(successes) / static_cast<double>(trials) : 0.0;
  }
  bool matches(const WorldState& state, const std::string& act) const;
  /// Effect facts inserted over the state (slot facts replace).
  WorldState apply_effect(const WorldState& state) const;

  std::string id() const;        // canonical serialization without counts
  std::string to_sexpr() const;  // full serialization with (confidence s t)
};

CausalRule parse_causal_rule(const std::string& text);

struct Transition3 {
  WorldState state;
  std::string action;
  WorldState next;
};

/// New causal rule from one transition: conditions are the full prior-state
/// facts, the effect is the set of changed facts, counts start at 1/1.
CausalRule induce_rule(const Transition3& tr);

/// trials += 1; successes += 1 iff the rule's effect was observed.
/// Precondition: the transition matches the rule's conditions and action.
CausalRule update_confidence(const CausalRule& rule, const Transition3& tr);

/// Adds the single fact from the positive-instance states that best
/// discriminates positives from the counterexample (max information gain,
/// ties lexicographic). Returns nullopt when positives and the
/// counterexample share all tracked facts (no discriminator).
std::optional<CausalRule> refine_rule(const CausalRule& rule,
                                      const std::vector<WorldState>& positives,
                                      const Transition3& counterexample);

/// Prediction over next states from matching causal rules, weighted by
/// confidence and renormalized.
struct NextStatePrediction {
  std::vector<std::pair<WorldState, double>> outcomes;
  bool empty() const { return outcomes.empty(); }
  double fact_probability(const Term& fact) const;
};

NextStatePrediction predict_next(const std::vector<CausalRule>& rules,
                                 const WorldState& state,
                                 const std::string& action);

/// Observed facts whose predicted probability is below the threshold;
/// nullopt when the observation was expected.
std::optional<std::vector<Term>> detect_discrepancy(
    const NextStatePrediction& predicted, const WorldState& observed_next,
    double threshold = 0.1);

/// Timestamped interaction events supporting delayed-effect attribution.
class EventLog {
 public:
  struct Ingestion {
    long t;
    std::vector<Term> features;
  };
  struct Effect {
    long t;
    std::string kind;  // "sickness" | "benefit"
  };

  explicit EventLog(std::size_t retention = 256) : retention_(retention) {}

  void log_action(long t, bool is_move);
  void log_ingestion(long t, std::vector<Term> features);
  void log_effect(long t, std::string kind);

  const std::deque<Ingestion>& ingestions() const { return ingestions_; }
  /// Move-action fraction over (t0, t0+span].
  double move_fraction(long t0, int span) const;

 private:
  void trim(long now);

  std::size_t retention_;
  std::deque<Ingestion> ingestions_;
  std::deque<std::pair<long, bool>> actions_;  // (t, is_move)
};

/// Candidate temporal rules for an observed delayed effect: one per
/// ingestion within max_lag, sweeping the delay threshold over
/// {lag-2 .. lag+2} and both activity predicates. Candidates start with
/// zero counts and are confirmed or refuted by confidence counting.
std::vector<CausalRule> attribute_delayed(const EventLog& log,
                                          const EventLog::Effect& effect,
                                          int max_lag, double activity_level = 0.5);

/// Shortest action sequence (uniform-cost over predicted-effect transitions,
/// rules with confidence >= 0.5) reaching a goal-satisfying state within the
/// horizon; empty sequence when the goal already holds; nullopt when
/// unreachable.
std::optional<std::vector<std::string>> plan(
    const std::vector<CausalRule>& rules, const WorldState& state,
    const std::function<bool(const WorldState&)>& goal, int horizon);

struct AirisConfig {
  double discrepancy_threshold = 0.1;
  int max_lag = 14;
  double activity_level = 0.5;
  std::size_t max_positives = 8;
  std::size_t retention = 256;
};

/// Drives causal-rule induction, refinement, confidence counting and
/// delayed-effect attribution over a stream of transitions.
class AirisEngine {
 public:
  explicit AirisEngine(AirisConfig cfg = {}) : cfg_(cfg), log_(cfg.retention) {}

  /// Digest one environment transition with its event annotations.
  void observe(const WorldState& state, const std::string& action,
               const WorldState& next,
               const std::map<std::string, std::string>& info, long t);

  const std::vector<CausalRule>& rules() const { return rules_; }
  std::vector<CausalRule>& rules() { return rules_; }
  const EventLog& log() const { return log_; }

 private:
  void add_rule(CausalRule rule);
  void check_temporal(long t, bool effect_now, const std::string& effect_kind);

  AirisConfig cfg_;
  EventLog log_;
  std::vector<CausalRule> rules_;
  std::map<std::string, std::size_t> index_;               // id -> position
  std::map<std::string, std::vector<WorldState>> positives_;  // id -> example states
};

}  // namespace actpc
