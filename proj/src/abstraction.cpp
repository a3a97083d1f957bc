#include "actpc/abstraction.hpp"

#include <algorithm>
#include <map>

namespace actpc {

namespace {

struct ConjStats {
  std::vector<Term> facts;
  int count = 0;
  double reward_sum = 0.0;
  std::map<std::string, std::pair<int, double>> per_action;  // count, reward
};

std::string conj_key(const std::vector<Term>& facts) {
  std::string key;
  for (const Term& f : facts) {
    key += to_string(f);
    key += '|';
  }
  return key;
}

}  // namespace

std::string AbstractionEngine::fresh_symbol() {
  // PatternA, PatternB, ..., PatternZ, PatternAA, ...
  int n = counter_++;
  std::string suffix;
  do {
    suffix.insert(suffix.begin(), static_cast<char>('A' + n % 26));
    n = n / 26 - 1;
  } while (n >= 0);
  return "Pattern" + suffix;
}

std::vector<RewriteRule> AbstractionEngine::propose(
    const HistoryWindow& history, const std::vector<std::string>& feature_slots,
    int support, double lift_threshold) {
  std::map<std::string, ConjStats> stats;
  double marginal_sum = 0.0;
  int n_records = 0;

  for (const Transition& tr : history.records()) {
    std::vector<Term> feats;
    for (const Term& f : tr.state.facts())
      if (std::find(feature_slots.begin(), feature_slots.end(), f.label) !=
          feature_slots.end())
        feats.push_back(f);
    marginal_sum += tr.reward;
    ++n_records;
    if (feats.size() < 2) continue;
    auto note = [&](std::vector<Term> conj) {
      std::sort(conj.begin(), conj.end());
      ConjStats& cs = stats[conj_key(conj)];
      if (cs.count == 0) cs.facts = conj;
      cs.count += 1;
      cs.reward_sum += tr.reward;
      auto& pa = cs.per_action[tr.action];
      pa.first += 1;
      pa.second += tr.reward;
    };
    for (std::size_t a = 0; a < feats.size(); ++a)
      for (std::size_t b = a + 1; b < feats.size(); ++b) {
        note({feats[a], feats[b]});
        for (std::size_t c = b + 1; c < feats.size(); ++c)
          note({feats[a], feats[b], feats[c]});
      }
  }
  if (n_records == 0) return {};
  const double marginal = marginal_sum / n_records;

  std::vector<RewriteRule> proposals;
  for (auto& [key, cs] : stats) {
    if (cs.count < support) continue;
    const double lift = cs.reward_sum / cs.count - marginal;
    if (!(lift > lift_threshold)) continue;  // strict
    if (!proposed_.insert(key).second) continue;

    AbstractionLabel label{fresh_symbol(), cs.facts};

    // (a) labeling rule: conjunction -> conjunction + category node
    Pattern llhs{cs.facts};
    Pattern lrhs{cs.facts};
    lrhs.facts.push_back(Term::fact("Label", label.symbol));
    proposals.emplace_back(llhs, lrhs, RuleOrigin::Abstraction);

    // (b) policy template conditioned on the label, using the empirically
    // best action under the conjunction (ties lexicographic).
    std::string best_action;
    double best_mean = -std::numeric_limits<double>::infinity();
    for (const auto& [action, cr] : cs.per_action) {
      double mean = cr.second / cr.first;
      if (mean > best_mean || (mean == best_mean && action < best_action)) {
        best_mean = mean;
        best_action = action;
      }
    }
    if (!best_action.empty()) {
      Pattern plhs{{Term::fact("Label", label.symbol)}};
      Pattern prhs{{Term::fact("Label", label.symbol),
                    Term::fact("Action", best_action)}};
      proposals.emplace_back(plhs, prhs, RuleOrigin::Abstraction);
    }
    labels_.push_back(std::move(label));
  }
  return proposals;
}

}  // namespace actpc
