#pragma once

#include "actpc/transport.hpp"

namespace actpc {

/// Windowed KL objective: F(pi) = KL(q || pbar(pi)) where q is the smoothed
/// reward-weighted outcome distribution of the history window and pbar is
/// the mixture over window states of the per-state predicted distributions
/// (rule probabilities renormalized over the matching subset). Smoothing is
/// applied to both sides over the union of observed and predicted outcomes.
///
/// States reference per-rule outcome keys ("" = rule does not match); they
/// may be borrowed from the trainer's state tables or owned (tests).
class WindowLoss {
 public:
  void add_state(double n_records, const std::vector<std::string>* outcomes) {
    states_.push_back({n_records, outcomes, {}});
    n_records_ += n_records;
  }
  void add_state_owned(double n_records, std::vector<std::string> outcomes) {
    states_.push_back({n_records, nullptr, std::move(outcomes)});
    n_records_ += n_records;
  }
  void add_observation(const std::string& outcome, double weight) {
    counts_[outcome] += weight;
    total_weight_ += weight;
  }
  void set_smoothing(double lam) { smoothing_ = lam; }

  bool empty() const { return states_.empty() || counts_.empty(); }
  std::size_t n_states() const { return states_.size(); }
  const std::map<std::string, double>& counts() const { return counts_; }

  double value(const Vector& pi) const;
  /// dF/dpi, consistent with value() to machine precision.
  Vector grad_pi(const Vector& pi) const;

  /// Value with one extra rule appended to the population; extra_keys[s] is
  /// the candidate's outcome key at state s ("" = no match) and pi_ext has
  /// one trailing entry for it.
  double value_with_extra(const Vector& pi_ext,
                          const std::vector<std::string>& extra_keys) const;
  /// Value with rule `index` structurally replaced; cand_keys as above.
  double value_with_replacement(const Vector& pi, std::size_t index,
                                const std::vector<std::string>& cand_keys) const;

  /// Entropy of the smoothed observed distribution (over its own support).
  double observed_entropy() const;

  /// View as a transport-module loss; references *this, which must outlive
  /// the returned object.
  DistributionLoss as_distribution_loss() const;

 private:
  struct StateEntry {
    double n = 1.0;
    const std::vector<std::string>* borrowed = nullptr;
    std::vector<std::string> owned;
    const std::vector<std::string>& outcomes() const {
      return borrowed ? *borrowed : owned;
    }
  };

  template <typename KeyAt>
  double value_impl(const Vector& pi, std::size_t n_rules, KeyAt key_at) const;

  std::vector<StateEntry> states_;
  std::map<std::string, double> counts_;
  double total_weight_ = 0.0;
  double n_records_ = 0.0;
  double smoothing_ = 1e-3;
};

}  // namespace actpc
