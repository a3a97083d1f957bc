#include "actpc/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace actpc {

std::string to_string(Updater u) {
  switch (u) {
    case Updater::Naive: return "naive";
    case Updater::Natural: return "natural";
    case Updater::NaturalAiris: return "natural+airis";
  }
  return "natural";
}

Updater updater_from_string(const std::string& s) {
  if (s == "naive") return Updater::Naive;
  if (s == "natural") return Updater::Natural;
  if (s == "natural+airis") return Updater::NaturalAiris;
  throw Error("unknown updater '" + s + "'");
}

Trainer::Trainer(TrainerConfig cfg, Env& env)
    : cfg_(cfg), env_(env), history_(cfg.window), airis_(cfg.airis) {
  proj_.context_slots = env_.context_slots();
  proj_.include_next = cfg_.extended_outcomes;
  rng_.seed(cfg_.seed * 0x9e3779b97f4a7c15ull + 0x2545f4914f6cdd1dull);
  for (RewriteRule& r : env_.seed_rules()) {
    if (rule_index_.count(r.id())) continue;
    rule_index_[r.id()] = rules_.size();
    rules_.push_back(std::move(r));
  }
  params_.logits = Vector::Zero(rules_.size());
  below_floor_.assign(rules_.size(), 0);
}

std::uint64_t Trainer::episode_seed(long episode) const {
  std::uint64_t x = (cfg_.seed + 1) * 0x9e3779b97f4a7c15ull +
                    static_cast<std::uint64_t>(episode) * 0xbf58476d1ce4e5b9ull;
  x ^= x >> 31;
  return x;
}

double Trainer::schedule(long t) const {
  const double horizon = cfg_.alpha_ep_decay_at * static_cast<double>(cfg_.max_iterations);
  if (horizon <= 0.0) return 0.0;
  return std::max(0.0, 1.0 - static_cast<double>(t) / horizon);
}

std::string Trainer::rule_outcome(const RewriteRule& rule, const WorldState& state) const {
  auto out = apply_rule(rule, state);
  if (!out) return {};
  return outcome_key(proj_, state, action_of(*out), &*out);
}

Trainer::StateTable& Trainer::ensure_table(const WorldState& state) {
  const std::string digest = state.digest();
  auto it = tables_.find(digest);
  if (it == tables_.end()) {
    StateTable tbl;
    tbl.state = state;
    tbl.outcome_by_rule.reserve(rules_.size());
    for (const RewriteRule& r : rules_)
      tbl.outcome_by_rule.push_back(rule_outcome(r, state));
    it = tables_.emplace(digest, std::move(tbl)).first;
  }
  return it->second;
}

void Trainer::add_rule(RewriteRule rule, double logit) {
  if (rule_index_.count(rule.id())) return;
  if (rules_.size() >= cfg_.max_rules) return;
  for (auto& [digest, tbl] : tables_)
    tbl.outcome_by_rule.push_back(rule_outcome(rule, tbl.state));
  rule_index_[rule.id()] = rules_.size();
  rules_.push_back(std::move(rule));
  Vector logits(params_.logits.size() + 1);
  logits.head(params_.logits.size()) = params_.logits;
  logits(logits.size() - 1) = logit;
  params_.logits = std::move(logits);
  below_floor_.push_back(0);
  graph_dirty_ = true;
}

void Trainer::add_rule_with_mean_mass(RewriteRule rule, double extra_logit) {
  // Logit placing the newcomer at the incumbents' mean probability:
  // log(mean p) in unnormalized space is logsumexp(xi) - log N.
  const Vector& xi = params_.logits;
  if (xi.size() == 0) {
    add_rule(std::move(rule), extra_logit);
    return;
  }
  const double shift = xi.maxCoeff();
  const double lse = shift + std::log((xi.array() - shift).exp().sum());
  add_rule(std::move(rule), lse - std::log(static_cast<double>(xi.size())) + extra_logit);
}

void Trainer::replace_rule(std::size_t index, RewriteRule rule) {
  if (rule_index_.count(rule.id())) return;  // structural duplicate
  rule_index_.erase(rules_[index].id());
  rule_index_[rule.id()] = index;
  rules_[index] = std::move(rule);
  below_floor_[index] = 0;
  for (auto& [digest, tbl] : tables_)
    tbl.outcome_by_rule[index] = rule_outcome(rules_[index], tbl.state);
  graph_dirty_ = true;
}

void Trainer::remove_rules(std::vector<std::size_t> indices) {
  if (indices.empty()) return;
  std::sort(indices.begin(), indices.end(), std::greater<>());
  for (std::size_t idx : indices) {
    rule_index_.erase(rules_[idx].id());
    rules_.erase(rules_.begin() + static_cast<std::ptrdiff_t>(idx));
    below_floor_.erase(below_floor_.begin() + static_cast<std::ptrdiff_t>(idx));
    Vector logits(params_.logits.size() - 1);
    logits.head(idx) = params_.logits.head(idx);
    logits.tail(logits.size() - static_cast<Eigen::Index>(idx)) =
        params_.logits.tail(logits.size() - static_cast<Eigen::Index>(idx));
    params_.logits = std::move(logits);
    for (auto& [digest, tbl] : tables_)
      tbl.outcome_by_rule.erase(tbl.outcome_by_rule.begin() +
                                static_cast<std::ptrdiff_t>(idx));
  }
  rule_index_.clear();
  for (std::size_t i = 0; i < rules_.size(); ++i) rule_index_[rules_[i].id()] = i;
  graph_dirty_ = true;
}

namespace {

bool key_is_actionable(const std::string& key) {
  return !key.empty() && key.find("(act -)") == std::string::npos;
}

}  // namespace

void Trainer::ensure_rules_match(const WorldState& obs) {
  StateTable* tbl = &ensure_table(obs);
  auto has_actionable = [&]() {
    return std::any_of(tbl->outcome_by_rule.begin(), tbl->outcome_by_rule.end(),
                       key_is_actionable);
  };
  if (has_actionable()) return;
  // Cold start: inject the generic per-action rules at mean mass.
  for (RewriteRule& r : env_.seed_rules())
    if (!rule_index_.count(r.id())) add_rule_with_mean_mass(std::move(r));
  tbl = &ensure_table(obs);
  if (!has_actionable())
    throw NoApplicableRule("no actionable rule for state " + to_string(obs));
}

Trainer::LossBundle Trainer::make_loss() {
  LossBundle bundle;
  bundle.loss.set_smoothing(cfg_.smoothing);
  // Observation weights favor outcomes whose mean return-to-go beats the
  // state's average: a standardized per-outcome advantage, so the bias
  // self-normalizes as the policy concentrates. Averaging within an outcome
  // first keeps single lucky transitions from outweighing the action value.
  struct Moments {
    double n = 0.0, sum = 0.0;
  };
  std::map<std::string, Moments> by_digest;
  std::map<std::string, Moments> by_outcome;
  std::map<std::string, std::string> outcome_digest;
  for (const Transition& tr : history_.records()) {
    Moments& d = by_digest[tr.state_digest];
    d.n += 1.0;
    d.sum += tr.rtg;
    Moments& o = by_outcome[tr.outcome];
    o.n += 1.0;
    o.sum += tr.rtg;
    outcome_digest[tr.outcome] = tr.state_digest;
  }
  // Spread of the outcome values within each state, for standardization.
  std::map<std::string, double> digest_sigma;
  {
    std::map<std::string, Moments> q_spread;
    for (const auto& [outcome, m] : by_outcome) {
      const auto& digest = outcome_digest.at(outcome);
      const double v = by_digest.at(digest).sum / by_digest.at(digest).n;
      const double q = m.sum / m.n;
      Moments& s = q_spread[digest];
      s.n += m.n;
      s.sum += m.n * (q - v) * (q - v);
    }
    for (const auto& [digest, s] : q_spread)
      digest_sigma[digest] = std::max(std::sqrt(s.sum / s.n), 0.05);
  }
  // Boost outcomes by standardized advantage, then renormalize within each
  // state so the weighting reshapes only the action-conditional: the state
  // marginal must stay the visit frequency the predicted mixture uses.
  std::map<std::string, double> outcome_mass;
  std::map<std::string, double> digest_mass;
  for (const auto& [outcome, m] : by_outcome) {
    const auto& digest = outcome_digest.at(outcome);
    const double v = by_digest.at(digest).sum / by_digest.at(digest).n;
    const double z = (m.sum / m.n - v) / digest_sigma.at(digest);
    const double w = 1.0 + cfg_.reward_bias * std::min(std::max(z, 0.0), 4.0);
    outcome_mass[outcome] = m.n * w;
    digest_mass[digest] += m.n * w;
  }
  for (const auto& [outcome, mass] : outcome_mass) {
    const auto& digest = outcome_digest.at(outcome);
    const double scale = by_digest.at(digest).n / digest_mass.at(digest);
    bundle.loss.add_observation(outcome, mass * scale);
  }
  for (const auto& [digest, m] : by_digest) {
    const StateTable& tbl = tables_.at(digest);
    bundle.loss.add_state(m.n, &tbl.outcome_by_rule);
    bundle.tables.push_back(&tbl);
  }
  return bundle;
}

std::vector<std::string> Trainer::candidate_keys(const LossBundle& bundle,
                                                 const RewriteRule& candidate) const {
  std::vector<std::string> keys;
  keys.reserve(bundle.tables.size());
  for (const void* p : bundle.tables)
    keys.push_back(rule_outcome(candidate, static_cast<const StateTable*>(p)->state));
  return keys;
}

double Trainer::windowed_error() {
  return make_loss().loss.value(rule_probs(params_));
}

double Trainer::loss_with_replacement(std::size_t rule_index, const RewriteRule& candidate) {
  LossBundle bundle = make_loss();
  return bundle.loss.value_with_replacement(rule_probs(params_), rule_index,
                                            candidate_keys(bundle, candidate));
}

double Trainer::loss_with_addition(const RewriteRule& candidate) {
  LossBundle bundle = make_loss();
  const Vector pi = rule_probs(params_);
  const double n = static_cast<double>(pi.size());
  Vector ext(pi.size() + 1);
  ext.head(pi.size()) = pi * (n / (n + 1.0));
  ext(pi.size()) = 1.0 / (n + 1.0);
  return bundle.loss.value_with_extra(ext, candidate_keys(bundle, candidate));
}

double Trainer::pair_distance(std::size_t i, std::size_t j) {
  const std::string &a = rules_[i].id(), &b = rules_[j].id();
  auto key = a < b ? std::make_pair(a, b) : std::make_pair(b, a);
  auto it = dist_cache_.find(key);
  if (it != dist_cache_.end()) return it->second;
  const double d = rule_distance(rules_[i], rules_[j]);
  dist_cache_.emplace(std::move(key), d);
  return d;
}

void Trainer::rebuild_graph() {
  const std::size_t n = rules_.size();
  Matrix dist = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist(i, j) = dist(j, i) = pair_distance(i, j);
  graph_ = build_rule_graph_from_distances(dist, cfg_.graph_k, cfg_.sigma);
  graph_dirty_ = false;
}

void Trainer::propagate_return(double reward) {
  if (reward == 0.0 || history_.empty()) return;
  const long now = history_.records().back().t;
  for (auto it = history_.records().rbegin(); it != history_.records().rend(); ++it) {
    if (it->episode != episode_) break;
    it->rtg += std::pow(cfg_.gamma, static_cast<double>(now - it->t)) * reward;
  }
}

void Trainer::local_search_update() {
  if (history_.empty()) return;
  LossBundle bundle = make_loss();
  const Vector pi = rule_probs(params_);
  double current = bundle.loss.value(pi);
  std::vector<std::string> mutation_labels = proj_.context_slots;
  mutation_labels.push_back("Label");
  NeighborhoodContext nctx =
      make_neighborhood_context(history_, env_.actions(), std::move(mutation_labels));
  const std::size_t n = rules_.size();
  for (std::size_t i = 0; i < n; ++i) {
    auto candidates = neighborhood(rules_[i], cfg_.budget, rng_, nctx);
    const CandidateEdit* best = nullptr;
    double best_loss = current;
    double best_dist = 0.0;
    for (const CandidateEdit& cand : candidates) {
      if (rule_index_.count(cand.mutated.id())) continue;
      const double e = bundle.loss.value_with_replacement(
          pi, i, candidate_keys(bundle, cand.mutated));
      if (!(e < current)) continue;  // accept only strict improvements
      const double d = rule_distance(rules_[i], cand.mutated);
      if (!best || e < best_loss ||
          (e == best_loss &&
           (d < best_dist || (d == best_dist && cand.mutated.id() < best->mutated.id())))) {
        best = &cand;
        best_loss = e;
        best_dist = d;
      }
    }
    if (best) {
      replace_rule(i, best->mutated);
      current = best_loss;  // tables updated in place; bundle stays valid
    }
  }
}

void Trainer::try_exploration_edits(const LossBundle& bundle, double current_loss) {
  if (cfg_.edits_per_iter <= 0 || rules_.empty()) return;
  std::vector<std::string> mutation_labels = proj_.context_slots;
  mutation_labels.push_back("Label");
  NeighborhoodContext nctx =
      make_neighborhood_context(history_, env_.actions(), std::move(mutation_labels));
  const Vector pi = rule_probs(params_);
  const double n = static_cast<double>(pi.size());
  Vector ext(pi.size() + 1);
  ext.head(pi.size()) = pi * (n / (n + 1.0));
  ext(pi.size()) = 1.0 / (n + 1.0);
  int tried = 0;
  std::uniform_int_distribution<std::size_t> pick_rule(0, rules_.size() - 1);
  for (int attempt = 0; attempt < cfg_.edits_per_iter * 3 && tried < cfg_.edits_per_iter;
       ++attempt) {
    if (rules_.size() >= cfg_.max_rules) break;
    auto edits = neighborhood(rules_[pick_rule(rng_)], 1, rng_, nctx);
    if (edits.empty()) continue;
    RewriteRule cand = std::move(edits.front().mutated);
    if (rule_index_.count(cand.id())) continue;
    ++tried;
    const double e = bundle.loss.value_with_extra(ext, candidate_keys(bundle, cand));
    if (e < current_loss) add_rule_with_mean_mass(std::move(cand));
  }
}

void Trainer::natural_update() {
  if (history_.empty()) return;
  {
    LossBundle bundle = make_loss();
    const Vector pi = rule_probs(params_);
    const double f0 = bundle.loss.value(pi);

    if (rules_.size() >= 2) {
      Vector grad = softmax_jacobian(pi).transpose() * bundle.loss.grad_pi(pi);
      if (grad.norm() > 1e-13) {
        if (graph_dirty_) rebuild_graph();
        Matrix lap = laplacian(graph_, pi);
        Matrix metric = metric_tensor(softmax_jacobian(pi), pinv(lap));
        const double ridge =
            cfg_.ridge_scale * metric.trace() / static_cast<double>(rules_.size()) + 1e-12;
        auto stepped = natural_step(params_, grad, metric, 1.0, ridge);
        if (!stepped) {
          ++skipped_steps_;
        } else {
          const Vector delta = params_.logits - stepped->logits;  // unit-step direction
          bool accepted = false;
          double h = cfg_.h;
          for (int bt = 0; bt < 13; ++bt) {
            RuleParams cand{params_.logits - h * delta};
            const double f = bundle.loss.value(rule_probs(cand));
            if (f < f0) {
              params_ = std::move(cand);
              accepted = true;
              // descent assertion on the accepted step
              if (!(bundle.loss.value(rule_probs(params_)) < f0)) ++descent_violations_;
              break;
            }
            h /= 2.0;
          }
          if (!accepted) ++skipped_steps_;
        }
      }
    }
  }

  // Prune rules whose probability stayed below the floor for M iterations.
  const Vector pi = rule_probs(params_);
  std::vector<std::size_t> to_remove;
  for (std::size_t i = 0; i < rules_.size(); ++i) {
    below_floor_[i] = pi(i) < cfg_.prune_floor ? below_floor_[i] + 1 : 0;
    if (below_floor_[i] >= cfg_.prune_patience &&
        rules_.size() - to_remove.size() > cfg_.min_rules)
      to_remove.push_back(i);
  }
  remove_rules(std::move(to_remove));

  LossBundle bundle = make_loss();
  try_exploration_edits(bundle, bundle.loss.value(rule_probs(params_)));

  if (cfg_.abstraction_interval > 0 && t_ > 0 && t_ % cfg_.abstraction_interval == 0) {
    for (RewriteRule& r : abstraction_.propose(history_, proj_.context_slots,
                                               cfg_.abstraction_support,
                                               cfg_.abstraction_lift))
      add_rule_with_mean_mass(std::move(r));
  }
}

void Trainer::lower_causal_rules() {
  for (const CausalRule& cr : airis_.rules()) {
    if (cr.temporal || cr.action.empty()) continue;
    if (cr.trials < cfg_.airis_lower_trials ||
        cr.confidence() < cfg_.airis_lower_confidence)
      continue;
    if (lowered_.count(cr.id())) continue;
    lowered_.insert(cr.id());
    // Lowered rule: the causal rule's context conditions guard its action.
    Pattern lhs;
    for (const Term& c : cr.conditions)
      if (std::find(proj_.context_slots.begin(), proj_.context_slots.end(),
                    c.label) != proj_.context_slots.end())
        lhs.facts.push_back(c);
    if (lhs.facts.empty()) continue;
    Pattern rhs = lhs;
    rhs.facts.push_back(Term::fact("Action", cr.action));
    try {
      RewriteRule lowered(std::move(lhs), std::move(rhs), RuleOrigin::Airis);
      if (!rule_index_.count(lowered.id()))
        add_rule_with_mean_mass(std::move(lowered), std::log(cr.confidence() + 1e-3));
    } catch (const Error&) {
      // malformed lowering; skip
    }
  }
}

IterationMetrics Trainer::run_iteration() {
  if (!obs_ready_) {
    obs_ = env_.reset(episode_seed(episode_));
    obs_ready_ = true;
  }
  const WorldState obs = obs_;
  ensure_rules_match(obs);
  StateTable& tbl = ensure_table(obs);

  // Behavior distribution: the model's renormalized probabilities mixed with
  // a decaying uniform exploration term over the selectable rules. Without
  // chaining only action-producing rules are selectable.
  std::vector<std::size_t> selectable;
  for (std::size_t r = 0; r < tbl.outcome_by_rule.size(); ++r) {
    const std::string& key = tbl.outcome_by_rule[r];
    if (key.empty()) continue;
    if (!cfg_.chain && !key_is_actionable(key)) continue;
    selectable.push_back(r);
  }
  const Vector pi = rule_probs(params_);
  std::vector<double> behavior(rules_.size(), 0.0);
  {
    double z = 0.0;
    for (std::size_t r : selectable) z += pi(r);
    const double eps = schedule(t_) > 0.0
                           ? std::max(cfg_.explore_eps * schedule(t_), cfg_.explore_floor)
                           : 0.0;
    const double uniform = 1.0 / static_cast<double>(selectable.size());
    for (std::size_t r : selectable) {
      const double model = z > 0.0 ? pi(r) / z : uniform;
      behavior[r] = (1.0 - eps) * model + eps * uniform;
    }
  }

  GenerateOptions gopts;
  gopts.chain = cfg_.chain;
  gopts.max_depth = cfg_.chain_depth;
  GenerateResult gen = generate(rules_, behavior, obs, rng_, gopts);
  std::string action = action_of(gen.state);
  if (action == "-") action = env_.actions().front();  // chain produced no action

  StepResult sr = env_.step(action);

  Transition tr;
  tr.state = obs;
  tr.action = action;
  tr.next = sr.observation;
  tr.reward = sr.reward;
  tr.t = t_;
  tr.episode = episode_;
  tr.state_digest = obs.digest();
  tr.outcome = outcome_key(proj_, obs, action, &sr.observation);
  history_.push(std::move(tr));
  propagate_return(sr.reward);

  if (cfg_.updater == Updater::NaturalAiris) {
    airis_.observe(obs, action, sr.observation, sr.info, t_);
    lower_causal_rules();
  }

  // Error and rewards at the current parameters.
  LossBundle bundle = make_loss();
  const double e_t = bundle.loss.value(rule_probs(params_));
  const double r_ep = e_t + bundle.loss.observed_entropy();  // surprise = kl + H(q)
  const double alpha_ep_t = cfg_.alpha_ep * schedule(t_);
  IterationMetrics m;
  m.iter = t_;
  m.e_t = e_t;
  m.r_int = -e_t;
  m.r_ep = r_ep;
  m.r_env = sr.reward;
  m.r_t = combined_reward(e_t, r_ep, sr.reward, {cfg_.alpha_int, alpha_ep_t});
  m.updater = to_string(cfg_.updater);

  // Updates start once the window carries enough evidence; a near-empty
  // window would lock in whichever action happened to be sampled first.
  if (history_.size() >= cfg_.warmup) {
    switch (cfg_.updater) {
      case Updater::Naive:
        if (cfg_.naive_interval > 0 && t_ % cfg_.naive_interval == 0)
          local_search_update();
        break;
      case Updater::Natural:
      case Updater::NaturalAiris:
        natural_update();
        break;
    }
  }
  m.n_rules = rules_.size();

  if (sr.done) {
    ++episode_;
    obs_ = env_.reset(episode_seed(episode_));
  } else {
    obs_ = sr.observation;
  }
  ++t_;
  return m;
}

std::vector<IterationMetrics> Trainer::train() {
  std::vector<IterationMetrics> metrics;
  metrics.reserve(static_cast<std::size_t>(cfg_.max_iterations));
  for (long i = 0; i < cfg_.max_iterations; ++i) metrics.push_back(run_iteration());
  return metrics;
}

std::optional<Trainer::Geometry> Trainer::geometry() {
  if (rules_.size() < 2) return std::nullopt;
  if (graph_dirty_) rebuild_graph();
  const Vector pi = rule_probs(params_);
  Geometry g;
  g.laplacian = laplacian(graph_, pi);
  g.metric = metric_tensor(softmax_jacobian(pi), pinv(g.laplacian));
  Eigen::SelfAdjointEigenSolver<Matrix> el(g.laplacian), em(g.metric);
  g.laplacian_eigs = el.eigenvalues();
  g.metric_eigs = em.eigenvalues();
  return g;
}

std::string Trainer::rng_state() const {
  std::ostringstream os;
  os << rng_;
  return os.str();
}

void Trainer::restore(std::vector<RewriteRule> rules, Vector logits,
                      std::vector<CausalRule> causal, long iteration,
                      const std::string& rng_state) {
  if (rules.size() != static_cast<std::size_t>(logits.size()))
    throw Error("restore: logits not aligned with rules");
  rules_ = std::move(rules);
  rule_index_.clear();
  for (std::size_t i = 0; i < rules_.size(); ++i) rule_index_[rules_[i].id()] = i;
  params_.logits = std::move(logits);
  below_floor_.assign(rules_.size(), 0);
  airis_.rules() = std::move(causal);
  t_ = iteration;
  tables_.clear();
  graph_dirty_ = true;
  if (!rng_state.empty()) {
    std::istringstream is(rng_state);
    is >> rng_;
    if (is.fail()) throw Error("restore: bad rng state");
  }
}

}  // namespace actpc
