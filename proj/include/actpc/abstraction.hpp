#pragma once

#include "actpc/belief.hpp"
#include "actpc/rule.hpp"

namespace actpc {

/// A fresh category symbol standing for a feature conjunction.
struct AbstractionLabel {
  std::string symbol;            // e.g. PatternA
  std::vector<Term> conjunction; // >= 2 conjuncts
};

/// Mines feature conjunctions whose reward lift over the marginal exceeds a
/// threshold and proposes category nodes for them. Keeps the label counter
/// and remembers conjunctions it already proposed.
class AbstractionEngine {
 public:
  /// For each qualifying 2- or 3-feature conjunction emits (a) a labeling
  /// rule conjunction -> fresh label and (b) a policy-rule template
  /// conditioned on the label. Lift must strictly exceed the threshold.
  std::vector<RewriteRule> propose(const HistoryWindow& history,
                                   const std::vector<std::string>& feature_slots,
                                   int support, double lift_threshold);

  const std::vector<AbstractionLabel>& labels() const { return labels_; }

 private:
  std::string fresh_symbol();

  std::vector<AbstractionLabel> labels_;
  std::set<std::string> proposed_;
  int counter_ = 0;
};

}  // namespace actpc
