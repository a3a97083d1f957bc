#include "actpc/generate.hpp"

#include <numeric>

namespace actpc {

std::vector<std::size_t> matching_rules(const std::vector<RewriteRule>& rules,
                                        const WorldState& state) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < rules.size(); ++i)
    if (match(rules[i].lhs(), state)) out.push_back(i);
  return out;
}

std::vector<double> renormalize(const std::vector<double>& probs,
                                const std::vector<std::size_t>& subset) {
  double z = 0.0;
  for (std::size_t i : subset) z += probs[i];
  std::vector<double> out(subset.size(), 0.0);
  if (z <= 0.0) {
    // Degenerate: all matching rules have zero mass; fall back to uniform.
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(subset.size()));
    return out;
  }
  for (std::size_t k = 0; k < subset.size(); ++k) out[k] = probs[subset[k]] / z;
  return out;
}

namespace {

std::size_t sample_index(const std::vector<double>& weights, Rng& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  double u = uni(rng);
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    acc += weights[k];
    if (u < acc) return k;
  }
  return weights.size() - 1;
}

}  // namespace

GenerateResult generate(const std::vector<RewriteRule>& rules,
                        const std::vector<double>& probs,
                        const WorldState& state, Rng& rng,
                        const GenerateOptions& opts) {
  if (rules.size() != probs.size())
    throw Error("generate: probs not aligned with rules");
  GenerateResult res;
  res.state = state;
  int depth = 0;
  do {
    auto subset = matching_rules(rules, res.state);
    if (subset.empty()) {
      if (depth == 0) throw NoApplicableRule("no rule matches state " + to_string(state));
      break;
    }
    auto renorm = renormalize(probs, subset);
    std::size_t pick = subset[sample_index(renorm, rng)];
    auto next = apply_rule(rules[pick], res.state);
    res.state = std::move(*next);
    res.rule_index = pick;
    res.chain.push_back(pick);
    ++depth;
    if (!opts.chain) break;
    if (res.state.fact_with_label("Action")) break;
  } while (depth < opts.max_depth);
  return res;
}

}  // namespace actpc
