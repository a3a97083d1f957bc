#include "actpc/belief.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace actpc {

bool is_simplex(const Vector& v, double tol) {
  if (v.size() == 0) return false;
  if ((v.array() < -tol).any()) return false;
  return std::abs(v.sum() - 1.0) <= tol;
}

SimplexVector rule_probs(const RuleParams& params) {
  if (!params.logits.allFinite()) throw Error("rule_probs: non-finite logits");
  const double shift = params.logits.maxCoeff();
  Vector e = (params.logits.array() - shift).exp();
  return e / e.sum();
}

Matrix softmax_jacobian(const SimplexVector& p) {
  Matrix j = Matrix(p.asDiagonal()) - p * p.transpose();
  return j;
}

std::string outcome_key(const Projection& proj, const WorldState& state,
                        const std::string& action, const WorldState* next) {
  std::string ctx = "(ctx";
  for (const Term& f : state.facts()) {
    if (std::find(proj.context_slots.begin(), proj.context_slots.end(), f.label) !=
        proj.context_slots.end()) {
      ctx += ' ';
      ctx += to_string(f);
    }
  }
  ctx += ')';
  std::string key = "(" + ctx + " (act " + action + ")";
  if (proj.include_next && next) {
    key += " (next";
    for (const Term& f : next->facts()) {
      if (std::find(proj.context_slots.begin(), proj.context_slots.end(),
                    f.label) != proj.context_slots.end()) {
        key += ' ';
        key += to_string(f);
      }
    }
    key += ')';
  }
  key += ')';
  return key;
}

std::string action_of(const WorldState& rewritten) {
  auto v = rewritten.slot_value("Action");
  return v ? *v : "-";
}

double OutcomeDistribution::prob(const std::string& key) const {
  auto it = probs_.find(key);
  return it == probs_.end() ? 0.0 : it->second;
}

double OutcomeDistribution::total() const {
  double z = 0.0;
  for (const auto& [k, p] : probs_) z += p;
  return z;
}

void OutcomeDistribution::normalize() {
  double z = total();
  if (z <= 0.0) throw Error("cannot normalize an empty distribution");
  for (auto& [k, p] : probs_) p /= z;
}

std::string OutcomeDistribution::to_csv() const {
  std::string out = "outcome_key,prob\n";
  char buf[64];
  for (const auto& [k, p] : probs_) {
    std::snprintf(buf, sizeof(buf), "%.10g", p);
    out += k;
    out += ',';
    out += buf;
    out += '\n';
  }
  return out;
}

double kl(const OutcomeDistribution& q, const OutcomeDistribution& p) {
  double sum = 0.0;
  for (const auto& [m, qm] : q.probs()) {
    if (qm <= 0.0) continue;
    double pm = p.prob(m);
    if (pm <= 0.0) return std::numeric_limits<double>::infinity();
    sum += qm * (std::log(qm) - std::log(pm));
  }
  return std::max(sum, 0.0);
}

double entropy(const OutcomeDistribution& q) {
  double h = 0.0;
  for (const auto& [m, qm] : q.probs())
    if (qm > 0.0) h -= qm * std::log(qm);
  return h;
}

double surprise(const OutcomeDistribution& q, const OutcomeDistribution& p) {
  double s = 0.0;
  for (const auto& [m, qm] : q.probs()) {
    if (qm <= 0.0) continue;
    double pm = p.prob(m);
    if (pm <= 0.0) return std::numeric_limits<double>::infinity();
    s -= qm * std::log(pm);
  }
  return s;
}

double combined_reward(double e_t, double r_ep, double env_reward,
                       const RewardWeights& w) {
  return w.alpha_int * (-e_t) + w.alpha_ep * r_ep + env_reward;
}

void HistoryWindow::push(Transition tr) {
  if (tr.t < last_t_) throw Error("history timestamps must be monotone");
  last_t_ = tr.t;
  records_.push_back(std::move(tr));
  while (records_.size() > capacity_) records_.pop_front();
}

OutcomeDistribution predicted_dist(const std::vector<RewriteRule>& rules,
                                   const SimplexVector& probs,
                                   const WorldState& state,
                                   const Projection& proj, int n_samples,
                                   Rng* rng, const GenerateOptions& opts) {
  if (static_cast<std::size_t>(probs.size()) != rules.size())
    throw Error("predicted_dist: probs not aligned with rules");
  std::vector<double> pv(probs.data(), probs.data() + probs.size());
  OutcomeDistribution dist;
  if (n_samples <= 0 && !opts.chain) {
    auto subset = matching_rules(rules, state);
    if (subset.empty())
      throw NoApplicableRule("predicted_dist: no rule matches " + to_string(state));
    auto renorm = renormalize(pv, subset);
    for (std::size_t k = 0; k < subset.size(); ++k) {
      auto out = apply_rule(rules[subset[k]], state);
      dist.add(outcome_key(proj, state, action_of(*out), &*out), renorm[k]);
    }
    return dist;
  }
  if (!rng) throw Error("predicted_dist: Monte-Carlo mode needs an rng");
  int n = std::max(n_samples, 1);
  for (int s = 0; s < n; ++s) {
    auto res = generate(rules, pv, state, *rng, opts);
    dist.add(outcome_key(proj, state, action_of(res.state), &res.state),
             1.0 / static_cast<double>(n));
  }
  return dist;
}

OutcomeDistribution observed_dist(const HistoryWindow& history, double smoothing,
                                  const std::vector<std::string>& support) {
  if (history.empty() && smoothing <= 0.0)
    throw Error("observed_dist undefined: empty history and no smoothing");
  std::map<std::string, double> counts;
  for (const std::string& m : support) counts[m] = 0.0;
  double total = 0.0;
  for (const Transition& tr : history.records()) {
    counts[tr.outcome] += tr.weight;
    total += tr.weight;
  }
  const double denom = total + smoothing * static_cast<double>(counts.size());
  if (denom <= 0.0) throw Error("observed_dist undefined: zero total weight");
  OutcomeDistribution dist;
  for (auto& [m, c] : counts) dist.add(m, (c + smoothing) / denom);
  return dist;
}

}  // namespace actpc
