#pragma once

#include <Eigen/Dense>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "actpc/generate.hpp"
#include "actpc/rule.hpp"

namespace actpc {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Logits over the current rule population (the parameter vector driving the
/// rule distribution).
struct RuleParams {
  Vector logits;
};

/// Entries >= 0 summing to 1 (checked to 1e-9 by is_simplex).
using SimplexVector = Vector;

bool is_simplex(const Vector& v, double tol = 1e-9);

/// softmax(logits); shift-invariant, always a valid simplex for finite input.
SimplexVector rule_probs(const RuleParams& params);

/// Jacobian of softmax: diag(p) - p p^T. Columns sum to zero.
Matrix softmax_jacobian(const SimplexVector& p);

/// Canonical key of an outcome pattern m: the context facts retained by the
/// projection, the emitted action, and optionally a digest of the next
/// state's context facts.
struct Projection {
  std::vector<std::string> context_slots;  // fact labels kept as context
  bool include_next = false;
};

std::string outcome_key(const Projection& proj, const WorldState& state,
                        const std::string& action,
                        const WorldState* next = nullptr);

/// Extracts the Action slot value from a rewritten state ("-" when absent).
std::string action_of(const WorldState& rewritten);

/// Finite distribution over outcome keys.
class OutcomeDistribution {
 public:
  OutcomeDistribution() = default;
  explicit OutcomeDistribution(std::map<std::string, double> probs)
      : probs_(std::move(probs)) {}

  double prob(const std::string& key) const;
  void add(const std::string& key, double p) { probs_[key] += p; }
  const std::map<std::string, double>& probs() const { return probs_; }
  std::size_t support_size() const { return probs_.size(); }
  double total() const;
  void normalize();

  /// CSV rows "outcome_key,prob" with canonical s-expression keys.
  std::string to_csv() const;

 private:
  std::map<std::string, double> probs_;
};

/// D_KL(q||p) in nats. Terms with q=0 contribute 0. Returns +infinity when q
/// puts mass where p has none (the infinite-divergence signal).
double kl(const OutcomeDistribution& q, const OutcomeDistribution& p);

/// Shannon entropy of q in nats.
double entropy(const OutcomeDistribution& q);

/// Cross-entropy of q against p: sum_m q(m) log(1/p(m)). Equals
/// kl(q,p) + entropy(q); the epistemic reward.
double surprise(const OutcomeDistribution& q, const OutcomeDistribution& p);

struct RewardWeights {
  double alpha_int = 1.0;
  double alpha_ep = 0.0;
};

/// r_t = alpha_int * (-e_t) + alpha_ep * r_ep + env_reward.
double combined_reward(double e_t, double r_ep, double env_reward,
                       const RewardWeights& w);

/// One observed interaction step.
struct Transition {
  WorldState state;
  std::string action;
  WorldState next;
  double reward = 0.0;
  long t = 0;
  double weight = 1.0;      // observation weight used when estimating q
  std::string outcome;      // projected outcome key
  std::string state_digest;
  long episode = 0;
  double rtg = 0.0;         // discounted return-to-go within the episode
};

/// Ring buffer of the last W transitions, timestamps monotone.
class HistoryWindow {
 public:
  explicit HistoryWindow(std::size_t capacity = 256) : capacity_(capacity) {}

  void push(Transition tr);
  const std::deque<Transition>& records() const { return records_; }
  std::deque<Transition>& records() { return records_; }
  std::size_t size() const { return records_.size(); }
  bool empty() const { return records_.empty(); }
  std::size_t capacity() const { return capacity_; }

 private:
  std::size_t capacity_;
  std::deque<Transition> records_;
  long last_t_ = -1;
};

/// Predicted outcome distribution p_t for one state. Exact enumeration over
/// matching rules by default; Monte-Carlo with n_samples when sampling a
/// chained generator. Throws NoApplicableRule when nothing matches.
OutcomeDistribution predicted_dist(const std::vector<RewriteRule>& rules,
                                   const SimplexVector& probs,
                                   const WorldState& state,
                                   const Projection& proj,
                                   int n_samples = 0, Rng* rng = nullptr,
                                   const GenerateOptions& opts = {});

/// Observed distribution q_t: Laplace-smoothed weighted frequencies over the
/// given support. Throws Error on an empty history with zero smoothing.
OutcomeDistribution observed_dist(const HistoryWindow& history, double smoothing,
                                  const std::vector<std::string>& support);

}  // namespace actpc
