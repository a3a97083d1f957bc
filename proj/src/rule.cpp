#include "actpc/rule.hpp"

#include <algorithm>
#include <functional>

namespace actpc {

std::set<std::string> Pattern::variables() const {
  std::set<std::string> vars;
  for (const Term& f : facts) f.collect_variables(vars);
  return vars;
}

bool Pattern::is_ground() const {
  return std::all_of(facts.begin(), facts.end(),
                     [](const Term& f) { return f.is_ground(); });
}

std::string to_string(const Pattern& p) {
  std::string out;
  for (std::size_t i = 0; i < p.facts.size(); ++i) {
    if (i) out += ' ';
    out += to_string(p.facts[i]);
  }
  return out;
}

std::string to_string(RuleOrigin o) {
  switch (o) {
    case RuleOrigin::Seed: return "seed";
    case RuleOrigin::Mutation: return "mutation";
    case RuleOrigin::Abstraction: return "abstraction";
    case RuleOrigin::Airis: return "airis";
  }
  return "seed";
}

RuleOrigin rule_origin_from_string(const std::string& s) {
  if (s == "seed") return RuleOrigin::Seed;
  if (s == "mutation") return RuleOrigin::Mutation;
  if (s == "abstraction") return RuleOrigin::Abstraction;
  if (s == "airis") return RuleOrigin::Airis;
  throw Error("unknown rule origin: " + s);
}

namespace {

// Serialization with variable names erased, used as a rename-independent
// sort key for canonicalization.
std::string erased_key(const Term& t) {
  if (t.kind == Term::Kind::Variable) return "?";
  if (t.children.empty()) return t.label;
  std::string out = "(" + t.label;
  for (const Term& c : t.children) out += " " + erased_key(c);
  return out + ")";
}

void sort_facts(std::vector<Term>& facts) {
  std::sort(facts.begin(), facts.end(), [](const Term& a, const Term& b) {
    auto ka = erased_key(a), kb = erased_key(b);
    if (ka != kb) return ka < kb;
    return to_string(a) < to_string(b);
  });
}

void rename_vars(Term& t, std::map<std::string, std::string>& names) {
  if (t.kind == Term::Kind::Variable) {
    auto it = names.find(t.label);
    if (it == names.end()) {
      std::string fresh = "v" + std::to_string(names.size());
      it = names.emplace(t.label, std::move(fresh)).first;
    }
    t.label = it->second;
    return;
  }
  for (Term& c : t.children) rename_vars(c, names);
}

}  // namespace

RewriteRule::RewriteRule(Pattern lhs, Pattern rhs, RuleOrigin origin)
    : lhs_(std::move(lhs)), rhs_(std::move(rhs)), origin_(origin) {
  auto lhs_vars = lhs_.variables();
  for (const std::string& v : rhs_.variables()) {
    if (!lhs_vars.count(v))
      throw Error("rhs variable ?" + v + " does not occur in lhs");
  }
  sort_facts(lhs_.facts);
  sort_facts(rhs_.facts);
  std::map<std::string, std::string> names;
  for (Term& f : lhs_.facts) rename_vars(f, names);
  for (Term& f : rhs_.facts) rename_vars(f, names);
  sort_facts(lhs_.facts);
  sort_facts(rhs_.facts);
  id_ = to_string(as_term());
}

Term RewriteRule::as_term() const {
  return Term::node("Rule", {Term::node("lhs", lhs_.facts),
                             Term::node("rhs", rhs_.facts)});
}

RewriteRule parse_rule(const std::string& text, RuleOrigin origin) {
  Term t = parse_term(text);
  if (t.label != "Rule" || t.children.size() != 2 ||
      t.children[0].label != "lhs" || t.children[1].label != "rhs")
    throw Error("expected (Rule (lhs ...) (rhs ...)): " + text);
  return RewriteRule(Pattern{t.children[0].children},
                     Pattern{t.children[1].children}, origin);
}

namespace {

bool unify(const Term& pattern, const Term& ground, Bindings& b) {
  if (pattern.kind == Term::Kind::Variable) {
    // First-order matching: variables bind leaf constants only.
    if (!ground.children.empty() || ground.kind != Term::Kind::Constant)
      return false;
    auto it = b.find(pattern.label);
    if (it != b.end()) return it->second == ground;
    b.emplace(pattern.label, ground);
    return true;
  }
  if (pattern.label != ground.label) return false;
  if (pattern.children.size() != ground.children.size()) return false;
  for (std::size_t i = 0; i < pattern.children.size(); ++i)
    if (!unify(pattern.children[i], ground.children[i], b)) return false;
  return true;
}

bool match_from(const Pattern& pattern, const WorldState& state,
                std::size_t next_fact, Bindings& b,
                std::vector<std::size_t>& used) {
  if (next_fact == pattern.facts.size()) return true;
  const Term& pf = pattern.facts[next_fact];
  const auto& facts = state.facts();
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (std::find(used.begin(), used.end(), i) != used.end()) continue;
    Bindings saved = b;
    if (unify(pf, facts[i], b)) {
      used.push_back(i);
      if (match_from(pattern, state, next_fact + 1, b, used)) return true;
      used.pop_back();
    }
    b = std::move(saved);
  }
  return false;
}

}  // namespace

std::optional<MatchResult> match_detail(const Pattern& pattern, const WorldState& state) {
  MatchResult res;
  if (!match_from(pattern, state, 0, res.bindings, res.fact_indices))
    return std::nullopt;
  return res;
}

std::optional<Bindings> match(const Pattern& pattern, const WorldState& state) {
  auto res = match_detail(pattern, state);
  if (!res) return std::nullopt;
  return std::move(res->bindings);
}

Term substitute(const Term& t, const Bindings& bindings) {
  if (t.kind == Term::Kind::Variable) {
    auto it = bindings.find(t.label);
    if (it == bindings.end()) throw Error("unbound variable ?" + t.label);
    return it->second;
  }
  if (t.children.empty()) return t;
  std::vector<Term> children;
  children.reserve(t.children.size());
  for (const Term& c : t.children) children.push_back(substitute(c, bindings));
  return Term::node(t.label, std::move(children));
}

std::vector<Term> substitute(const Pattern& p, const Bindings& bindings) {
  std::vector<Term> out;
  out.reserve(p.facts.size());
  for (const Term& f : p.facts) out.push_back(substitute(f, bindings));
  return out;
}

std::optional<WorldState> apply_rule(const RewriteRule& rule, const WorldState& state) {
  auto m = match_detail(rule.lhs(), state);
  if (!m) return std::nullopt;
  WorldState out;
  out.set_slot_labels(state.slot_labels());
  const auto& facts = state.facts();
  for (std::size_t i = 0; i < facts.size(); ++i) {
    if (std::find(m->fact_indices.begin(), m->fact_indices.end(), i) !=
        m->fact_indices.end())
      continue;
    out.insert(facts[i]);
  }
  for (Term& f : substitute(rule.rhs(), m->bindings)) out.insert(std::move(f));
  return out;
}

// ---------------------------------------------------------------------------
// Tree edit distance (Zhang & Shasha), unit costs.
// ---------------------------------------------------------------------------
namespace {

struct TedTree {
  std::vector<std::string> labels;  // postorder
  std::vector<int> lmld;            // leftmost leaf descendant, postorder index
  std::vector<int> keyroots;

  explicit TedTree(const Term& root) {
    build(root);
    std::map<int, int> last_with_lmld;
    for (int i = 0; i < static_cast<int>(labels.size()); ++i)
      last_with_lmld[lmld[i]] = i;
    for (auto& [l, i] : last_with_lmld) keyroots.push_back(i);
    std::sort(keyroots.begin(), keyroots.end());  // increasing postorder
  }

  int build(const Term& t) {
    int leftmost = -1;
    for (const Term& c : t.children) {
      int cl = build(c);
      if (leftmost < 0) leftmost = lmld[cl];
    }
    std::string label = t.kind == Term::Kind::Variable ? "?" + t.label : t.label;
    labels.push_back(std::move(label));
    int idx = static_cast<int>(labels.size()) - 1;
    lmld.push_back(leftmost < 0 ? idx : leftmost);
    return idx;
  }
};

}  // namespace

double tree_edit_distance(const Term& a, const Term& b) {
  TedTree ta(a), tb(b);
  const int n = static_cast<int>(ta.labels.size());
  const int m = static_cast<int>(tb.labels.size());
  std::vector<std::vector<double>> td(n, std::vector<double>(m, 0.0));
  std::vector<std::vector<double>> fd(n + 2, std::vector<double>(m + 2, 0.0));

  for (int ki : ta.keyroots) {
    for (int kj : tb.keyroots) {
      int li = ta.lmld[ki], lj = tb.lmld[kj];
      fd[li][lj] = 0.0;
      for (int i = li; i <= ki; ++i) fd[i + 1][lj] = fd[i][lj] + 1.0;
      for (int j = lj; j <= kj; ++j) fd[li][j + 1] = fd[li][j] + 1.0;
      for (int i = li; i <= ki; ++i) {
        for (int j = lj; j <= kj; ++j) {
          if (ta.lmld[i] == li && tb.lmld[j] == lj) {
            double rel = ta.labels[i] == tb.labels[j] ? 0.0 : 1.0;
            fd[i + 1][j + 1] = std::min({fd[i][j + 1] + 1.0,
                                         fd[i + 1][j] + 1.0,
                                         fd[i][j] + rel});
            td[i][j] = fd[i + 1][j + 1];
          } else {
            fd[i + 1][j + 1] = std::min({fd[i][j + 1] + 1.0,
                                         fd[i + 1][j] + 1.0,
                                         fd[ta.lmld[i]][tb.lmld[j]] + td[i][j]});
          }
        }
      }
    }
  }
  return td[n - 1][m - 1];
}

double rule_distance(const RewriteRule& a, const RewriteRule& b) {
  if (a.id() == b.id()) return 0.0;
  return tree_edit_distance(a.as_term(), b.as_term());
}

}  // namespace actpc
