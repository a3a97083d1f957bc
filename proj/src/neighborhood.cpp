#include "actpc/neighborhood.hpp"

#include <algorithm>
#include <set>

namespace actpc {

std::string to_string(MutationKind k) {
  switch (k) {
    case MutationKind::SpecializeVariable: return "specialize-variable";
    case MutationKind::GeneralizeConstant: return "generalize-constant";
    case MutationKind::SwapAction: return "swap-action";
    case MutationKind::AddCondition: return "add-condition";
    case MutationKind::RemoveCondition: return "remove-condition";
    case MutationKind::ComposeConjunction: return "compose-conjunction";
  }
  return "?";
}

NeighborhoodContext make_neighborhood_context(const HistoryWindow& history,
                                              const std::vector<std::string>& actions,
                                              std::vector<std::string> fact_labels,
                                              std::size_t max_states) {
  NeighborhoodContext ctx;
  ctx.actions = actions;
  ctx.fact_labels = std::move(fact_labels);
  std::set<std::string> seen;
  for (auto it = history.records().rbegin(); it != history.records().rend(); ++it) {
    if (ctx.states.size() >= max_states) break;
    if (seen.insert(it->state_digest).second) ctx.states.push_back(it->state);
  }
  return ctx;
}

namespace {

template <typename T>
const T& pick(const std::vector<T>& v, Rng& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

Term replace_var(const Term& t, const std::string& var, const Term& value) {
  if (t.kind == Term::Kind::Variable && t.label == var) return value;
  Term out = t;
  for (Term& c : out.children) c = replace_var(c, var, value);
  return out;
}

Term replace_constant(const Term& t, const std::string& value, const Term& var) {
  if (t.kind == Term::Kind::Constant && t.children.empty() && t.label == value)
    return var;
  Term out = t;
  for (Term& c : out.children) c = replace_constant(c, value, var);
  return out;
}

void collect_leaf_constants(const Term& t, bool under_action, std::set<std::string>& out) {
  if (t.kind == Term::Kind::Variable) return;
  if (t.children.empty()) {
    if (!under_action) out.insert(t.label);
    return;
  }
  for (const Term& c : t.children)
    collect_leaf_constants(c, under_action || t.label == "Action", out);
}

std::optional<RewriteRule> mutate(const RewriteRule& rule, MutationKind kind,
                                  Rng& rng, const NeighborhoodContext& ctx) {
  Pattern lhs = rule.lhs();
  Pattern rhs = rule.rhs();
  switch (kind) {
    case MutationKind::SpecializeVariable: {
      auto vars = lhs.variables();
      if (vars.empty()) return std::nullopt;
      std::vector<std::string> vlist(vars.begin(), vars.end());
      const std::string& v = pick(vlist, rng);
      // Values the variable actually takes on observed states.
      std::vector<Term> values;
      std::set<std::string> seen;
      for (const WorldState& s : ctx.states) {
        auto b = match(lhs, s);
        if (!b) continue;
        auto it = b->find(v);
        if (it != b->end() && seen.insert(to_string(it->second)).second)
          values.push_back(it->second);
      }
      if (values.empty()) return std::nullopt;
      const Term& value = pick(values, rng);
      for (Term& f : lhs.facts) f = replace_var(f, v, value);
      for (Term& f : rhs.facts) f = replace_var(f, v, value);
      break;
    }
    case MutationKind::GeneralizeConstant: {
      std::set<std::string> consts;
      for (const Term& f : lhs.facts) collect_leaf_constants(f, f.label == "Action", consts);
      if (consts.empty()) return std::nullopt;
      std::vector<std::string> clist(consts.begin(), consts.end());
      const std::string& c = pick(clist, rng);
      Term var = Term::variable("gen");
      for (Term& f : lhs.facts) f = replace_constant(f, c, var);
      for (Term& f : rhs.facts) f = replace_constant(f, c, var);
      break;
    }
    case MutationKind::SwapAction: {
      if (ctx.actions.size() < 2) return std::nullopt;
      bool swapped = false;
      for (Term& f : rhs.facts) {
        if (f.label != "Action" || f.children.size() != 1) continue;
        std::vector<std::string> others;
        for (const std::string& a : ctx.actions)
          if (a != f.children[0].label) others.push_back(a);
        if (others.empty()) return std::nullopt;
        f.children[0] = Term::constant(pick(others, rng));
        swapped = true;
        break;
      }
      if (!swapped) return std::nullopt;
      break;
    }
    case MutationKind::AddCondition: {
      std::set<std::string> lhs_labels;
      for (const Term& f : lhs.facts) lhs_labels.insert(f.label);
      std::vector<Term> addable;
      std::set<std::string> seen;
      for (const WorldState& s : ctx.states)
        for (const Term& f : s.facts())
          if (!lhs_labels.count(f.label) && f.label != "Action" &&
              ctx.label_allowed(f.label) && seen.insert(to_string(f)).second)
            addable.push_back(f);
      if (addable.empty()) return std::nullopt;
      lhs.facts.push_back(pick(addable, rng));
      break;
    }
    case MutationKind::RemoveCondition: {
      if (lhs.facts.size() < 2) return std::nullopt;
      auto rhs_vars = rhs.variables();
      std::vector<std::size_t> removable;
      for (std::size_t i = 0; i < lhs.facts.size(); ++i) {
        Pattern rest;
        for (std::size_t j = 0; j < lhs.facts.size(); ++j)
          if (j != i) rest.facts.push_back(lhs.facts[j]);
        auto rest_vars = rest.variables();
        bool covered = std::all_of(rhs_vars.begin(), rhs_vars.end(),
                                   [&](const std::string& v) { return rest_vars.count(v) > 0; });
        if (covered) removable.push_back(i);
      }
      if (removable.empty()) return std::nullopt;
      lhs.facts.erase(lhs.facts.begin() +
                      static_cast<std::ptrdiff_t>(pick(removable, rng)));
      break;
    }
    case MutationKind::ComposeConjunction: {
      std::set<std::string> lhs_labels;
      for (const Term& f : lhs.facts) lhs_labels.insert(f.label);
      // Two co-occurring facts from one observed state.
      std::vector<std::pair<Term, Term>> pairs;
      std::set<std::string> seen;
      for (const WorldState& s : ctx.states) {
        std::vector<Term> fresh;
        for (const Term& f : s.facts())
          if (!lhs_labels.count(f.label) && f.label != "Action" &&
              ctx.label_allowed(f.label))
            fresh.push_back(f);
        for (std::size_t a = 0; a < fresh.size(); ++a)
          for (std::size_t b = a + 1; b < fresh.size(); ++b) {
            if (fresh[a].label == fresh[b].label) continue;
            std::string key = to_string(fresh[a]) + "|" + to_string(fresh[b]);
            if (seen.insert(key).second) pairs.emplace_back(fresh[a], fresh[b]);
          }
      }
      if (pairs.empty()) return std::nullopt;
      const auto& [fa, fb] = pick(pairs, rng);
      lhs.facts.push_back(fa);
      lhs.facts.push_back(fb);
      break;
    }
  }
  try {
    return RewriteRule(std::move(lhs), std::move(rhs), RuleOrigin::Mutation);
  } catch (const Error&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<CandidateEdit> neighborhood(const RewriteRule& rule,
                                        std::size_t budget, Rng& rng,
                                        const NeighborhoodContext& ctx) {
  if (budget < 1) throw Error("neighborhood: budget must be >= 1");
  static const MutationKind kAll[] = {
      MutationKind::SpecializeVariable, MutationKind::GeneralizeConstant,
      MutationKind::SwapAction,         MutationKind::AddCondition,
      MutationKind::RemoveCondition,    MutationKind::ComposeConjunction,
  };
  std::vector<CandidateEdit> out;
  std::set<std::string> seen{rule.id()};
  const std::size_t attempts = budget * 10;
  std::uniform_int_distribution<std::size_t> dk(0, std::size(kAll) - 1);
  for (std::size_t a = 0; a < attempts && out.size() < budget; ++a) {
    MutationKind kind = kAll[dk(rng)];
    auto mutated = mutate(rule, kind, rng, ctx);
    if (!mutated) continue;
    if (!seen.insert(mutated->id()).second) continue;
    out.push_back({rule.id(), std::move(*mutated), kind});
  }
  return out;
}

}  // namespace actpc
