#pragma once

#include <unordered_map>

#include "actpc/abstraction.hpp"
#include "actpc/airis.hpp"
#include "actpc/env.hpp"
#include "actpc/neighborhood.hpp"
#include "actpc/transport.hpp"
#include "actpc/window_loss.hpp"

namespace actpc {

enum class Updater { Naive, Natural, NaturalAiris };

std::string to_string(Updater u);
Updater updater_from_string(const std::string& s);

struct TrainerConfig {
  double h = 0.5;                 // natural-gradient step size
  double ridge_scale = 1e-6;      // ridge = ridge_scale * trace(G)/N
  int graph_k = 4;                // mutual-kNN neighbor count
  double sigma = 0.0;             // ground-metric scale; <=0 picks the median distance
  double smoothing = 1e-3;        // Laplace smoothing for q and p
  std::size_t window = 256;       // history window W
  double alpha_int = 1.0;
  double alpha_ep = 0.1;
  double alpha_ep_decay_at = 0.8; // fraction of max_iterations where alpha_ep reaches 0
  int budget = 4;                 // neighborhood size B
  double prune_floor = 2e-3;
  int prune_patience = 30;        // M consecutive iterations below the floor
  std::uint64_t seed = 0;
  Updater updater = Updater::Natural;
  long max_iterations = 500;
  double gamma = 0.9;             // return-to-go discount for observation weights
  double reward_bias = 25.0;      // weight = 1 + reward_bias * max(0, rtg)
  double explore_eps = 0.15;      // behavior-policy mixture, decays like alpha_ep
  double explore_floor = 0.01;    // residual exploration until the decay ends
  std::size_t warmup = 32;        // records gathered before updates start
  int edits_per_iter = 2;         // exploration budget for trialed edits
  std::size_t max_rules = 160;
  std::size_t min_rules = 2;
  bool chain = false;
  int chain_depth = 8;
  bool extended_outcomes = false; // include next-state context in outcome keys
  long abstraction_interval = 0;  // 0 disables abstraction proposals
  int abstraction_support = 5;
  double abstraction_lift = 0.2;
  long naive_interval = 1;        // local-search cadence for the naive updater
  double e_threshold = 0.05;      // reporting threshold for iterations-to-threshold
  AirisConfig airis;
  double airis_lower_confidence = 0.5;  // causal rules above this lower into the chemistry
  long airis_lower_trials = 3;
};

struct IterationMetrics {
  long iter = 0;
  double e_t = 0.0;
  double r_int = 0.0;
  double r_ep = 0.0;
  double r_env = 0.0;
  double r_t = 0.0;
  std::size_t n_rules = 0;
  std::string updater;
};

/// The training loop: predict -> act -> observe -> error -> rewards -> rule
/// and parameter updates (local-search baseline or Wasserstein natural
/// gradient, optionally with causal induction).
class Trainer {
 public:
  Trainer(TrainerConfig cfg, Env& env);

  IterationMetrics run_iteration();
  std::vector<IterationMetrics> train();

  const TrainerConfig& config() const { return cfg_; }
  const std::vector<RewriteRule>& rules() const { return rules_; }
  const RuleParams& params() const { return params_; }
  const HistoryWindow& history() const { return history_; }
  const Projection& projection() const { return proj_; }
  long iteration() const { return t_; }
  const AirisEngine& airis() const { return airis_; }
  const AbstractionEngine& abstraction() const { return abstraction_; }

  /// Windowed error at the current parameters (the loss optimized by the
  /// natural updater).
  double windowed_error();

  /// Accepted natural steps that failed to strictly decrease the windowed
  /// loss (must stay 0) and steps skipped after backtracking ran out.
  long descent_violations() const { return descent_violations_; }
  long skipped_steps() const { return skipped_steps_; }

  /// Trial a single rule replacement against the current window; used by the
  /// local-search baseline and exposed for tests.
  double loss_with_replacement(std::size_t rule_index, const RewriteRule& candidate);
  double loss_with_addition(const RewriteRule& candidate);

  /// One local-search sweep (the naive update), one natural-gradient update.
  void local_search_update();
  void natural_update();

  struct Geometry {
    Matrix laplacian;
    Matrix metric;
    Vector laplacian_eigs;
    Vector metric_eigs;
  };
  /// Current transport geometry, for diagnostics dumps.
  std::optional<Geometry> geometry();

  std::string rng_state() const;
  /// Restore from snapshot data.
  void restore(std::vector<RewriteRule> rules, Vector logits,
               std::vector<CausalRule> causal, long iteration,
               const std::string& rng_state);

 public:
  /// The current windowed objective plus the state tables it was built over
  /// (needed to compute a candidate rule's outcome keys in the same order).
  struct LossBundle {
    WindowLoss loss;
    std::vector<const void*> tables;
  };
  LossBundle make_loss();
  /// Candidate outcome keys aligned with a LossBundle's states.
  std::vector<std::string> candidate_keys(const LossBundle& bundle,
                                          const RewriteRule& candidate) const;

 private:
  struct StateTable {
    WorldState state;
    // outcome key per rule; empty string = rule does not match this state
    std::vector<std::string> outcome_by_rule;
  };

  StateTable& ensure_table(const WorldState& state);
  std::string rule_outcome(const RewriteRule& rule, const WorldState& state) const;
  void add_rule(RewriteRule rule, double logit);
  void add_rule_with_mean_mass(RewriteRule rule, double extra_logit = 0.0);
  void replace_rule(std::size_t index, RewriteRule rule);
  void remove_rules(std::vector<std::size_t> indices);
  void ensure_rules_match(const WorldState& obs);

  void rebuild_graph();
  double pair_distance(std::size_t i, std::size_t j);
  double schedule(long t) const;  // linear decay factor for alpha_ep / eps
  std::uint64_t episode_seed(long episode) const;
  void propagate_return(double reward);
  void try_exploration_edits(const LossBundle& bundle, double current_loss);
  void lower_causal_rules();

  TrainerConfig cfg_;
  Env& env_;
  Projection proj_;
  std::vector<RewriteRule> rules_;
  std::map<std::string, std::size_t> rule_index_;
  RuleParams params_;
  std::vector<int> below_floor_;  // consecutive iterations below the prune floor
  HistoryWindow history_;
  Rng rng_;
  long t_ = 0;
  long episode_ = 0;
  WorldState obs_;
  bool obs_ready_ = false;

  std::unordered_map<std::string, StateTable> tables_;
  std::map<std::pair<std::string, std::string>, double> dist_cache_;
  RuleGraph graph_;
  bool graph_dirty_ = true;

  AirisEngine airis_;
  std::set<std::string> lowered_;
  AbstractionEngine abstraction_;

  long descent_violations_ = 0;
  long skipped_steps_ = 0;
};

}  // namespace actpc
