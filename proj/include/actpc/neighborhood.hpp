#pragma once

#include "actpc/belief.hpp"
#include "actpc/rule.hpp"

namespace actpc {

enum class MutationKind {
  SpecializeVariable,
  GeneralizeConstant,
  SwapAction,
  AddCondition,
  RemoveCondition,
  ComposeConjunction,
};

std::string to_string(MutationKind k);

struct CandidateEdit {
  std::string target_id;
  RewriteRule mutated;
  MutationKind kind;
};

/// What the mutation operators may draw on: the env's action set, a sample
/// of recently observed states, and the fact labels mutations may condition
/// on (facts outside the outcome context cannot reduce the windowed error
/// except by noise).
struct NeighborhoodContext {
  std::vector<std::string> actions;
  std::vector<WorldState> states;        // distinct observed states
  std::vector<std::string> fact_labels;  // empty: all labels allowed

  bool label_allowed(const std::string& label) const {
    if (fact_labels.empty()) return true;
    return std::find(fact_labels.begin(), fact_labels.end(), label) !=
           fact_labels.end();
  }
};

NeighborhoodContext make_neighborhood_context(const HistoryWindow& history,
                                              const std::vector<std::string>& actions,
                                              std::vector<std::string> fact_labels = {},
                                              std::size_t max_states = 64);

/// Up to `budget` well-formed candidate modifications of `rule`, sampled
/// uniformly over the applicable mutation kinds. Deterministic under the rng
/// state. Empty when nothing applies.
std::vector<CandidateEdit> neighborhood(const RewriteRule& rule,
                                        std::size_t budget, Rng& rng,
                                        const NeighborhoodContext& ctx);

}  // namespace actpc
