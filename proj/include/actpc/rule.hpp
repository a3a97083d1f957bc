#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "actpc/term.hpp"

namespace actpc {

/// Variable-name -> ground term. Keys are exactly the variables bound while
/// matching a pattern.
using Bindings = std::map<std::string, Term>;

/// An ordered conjunction of fact templates, possibly with variables.
/// Matching is first-order: a variable binds only to a leaf constant.
struct Pattern {
  std::vector<Term> facts;

  std::set<std::string> variables() const;
  bool is_ground() const;
};

std::string to_string(const Pattern& p);

enum class RuleOrigin { Seed, Mutation, Abstraction, Airis };

std::string to_string(RuleOrigin o);
RuleOrigin rule_origin_from_string(const std::string& s);

/// A rewrite rule lhs -> rhs. Construction canonicalizes fact order and
/// variable names, so structurally identical rules share one id (the
/// canonical serialization).
class RewriteRule {
 public:
  RewriteRule() = default;
  /// Throws Error if a rhs variable does not occur in the lhs.
  RewriteRule(Pattern lhs, Pattern rhs, RuleOrigin origin = RuleOrigin::Seed);

  const std::string& id() const { return id_; }
  const Pattern& lhs() const { return lhs_; }
  const Pattern& rhs() const { return rhs_; }
  RuleOrigin origin() const { return origin_; }
  void set_origin(RuleOrigin o) { origin_ = o; }

  /// Rule as a single term (Rule (lhs ...) (rhs ...)), used for
  /// serialization and the edit-distance ground metric.
  Term as_term() const;

  bool operator==(const RewriteRule& other) const { return id_ == other.id_; }

 private:
  Pattern lhs_;
  Pattern rhs_;
  RuleOrigin origin_ = RuleOrigin::Seed;
  std::string id_;
};

/// Parse a rule from "(Rule (lhs ...) (rhs ...))".
RewriteRule parse_rule(const std::string& text, RuleOrigin origin = RuleOrigin::Seed);

/// First consistent assignment of pattern variables to state facts under the
/// state's fact ordering; nullopt if none. Pattern facts bind distinct state
/// facts.
std::optional<Bindings> match(const Pattern& pattern, const WorldState& state);

/// As match(), but also reports which state fact index each pattern fact
/// consumed (needed to remove them on rewrite).
struct MatchResult {
  Bindings bindings;
  std::vector<std::size_t> fact_indices;
};
std::optional<MatchResult> match_detail(const Pattern& pattern, const WorldState& state);

/// Instantiate a term or pattern under bindings. Throws Error on an unbound
/// variable.
Term substitute(const Term& t, const Bindings& bindings);
std::vector<Term> substitute(const Pattern& p, const Bindings& bindings);

/// One rewrite: if lhs matches, matched facts are replaced by the
/// instantiated rhs facts; nullopt otherwise.
std::optional<WorldState> apply_rule(const RewriteRule& rule, const WorldState& state);

/// Ground metric between rules: exact ordered tree-edit distance between the
/// canonical rule terms, unit cost per node insert/delete/relabel.
double rule_distance(const RewriteRule& a, const RewriteRule& b);

/// Unit-cost tree edit distance between arbitrary terms (Zhang-Shasha).
double tree_edit_distance(const Term& a, const Term& b);

}  // namespace actpc
