#pragma once

#include <random>
#include <vector>

#include "actpc/rule.hpp"

namespace actpc {

struct NoApplicableRule : Error {
  using Error::Error;
};

using Rng = std::mt19937_64;

struct GenerateOptions {
  /// Chain rewrites until an Action fact appears (or nothing applies), up to
  /// max_depth. Off by default: one rewrite per decision step.
  bool chain = false;
  int max_depth = 8;
};

struct GenerateResult {
  std::size_t rule_index = 0;  // last applied rule
  WorldState state;
  std::vector<std::size_t> chain;  // all applied rule indices, in order
};

/// Indices of rules whose lhs matches the state.
std::vector<std::size_t> matching_rules(const std::vector<RewriteRule>& rules,
                                        const WorldState& state);

/// Probabilities renormalized over a matching subset; sums to 1.
std::vector<double> renormalize(const std::vector<double>& probs,
                                const std::vector<std::size_t>& subset);

/// The stochastic generative operator: samples one matching rule with
/// probability proportional to its prob renormalized over the matching
/// subset and applies it. Throws NoApplicableRule when nothing matches.
GenerateResult generate(const std::vector<RewriteRule>& rules,
                        const std::vector<double>& probs,
                        const WorldState& state, Rng& rng,
                        const GenerateOptions& opts = {});

}  // namespace actpc
