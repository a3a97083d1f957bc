#include "actpc/window_loss.hpp"

#include <cmath>

namespace actpc {

template <typename KeyAt>
double WindowLoss::value_impl(const Vector& pi, std::size_t n_rules,
                              KeyAt key_at) const {
  if (n_records_ <= 0.0 || counts_.empty()) return 0.0;
  std::map<std::string, double> pbar;
  for (const auto& [m, c] : counts_) pbar[m] = 0.0;
  for (std::size_t s = 0; s < states_.size(); ++s) {
    double z = 0.0;
    for (std::size_t r = 0; r < n_rules; ++r)
      if (!key_at(s, r).empty()) z += pi(r);
    if (z <= 0.0) continue;
    const double scale = states_[s].n / (n_records_ * z);
    for (std::size_t r = 0; r < n_rules; ++r) {
      const std::string& key = key_at(s, r);
      if (!key.empty()) pbar[key] += scale * pi(r);
    }
  }
  const double lam = smoothing_;
  const double support = static_cast<double>(pbar.size());
  const double qdenom = total_weight_ + lam * support;
  const double pdenom = 1.0 + lam * support;
  double e = 0.0;
  for (const auto& [m, pm] : pbar) {
    auto it = counts_.find(m);
    const double qc = it == counts_.end() ? 0.0 : it->second;
    const double q = (qc + lam) / qdenom;
    const double p = (pm + lam) / pdenom;
    if (q > 0.0) e += q * (std::log(q) - std::log(p));
  }
  return std::max(e, 0.0);
}

double WindowLoss::value(const Vector& pi) const {
  const std::size_t n = static_cast<std::size_t>(pi.size());
  return value_impl(pi, n, [&](std::size_t s, std::size_t r) -> const std::string& {
    return states_[s].outcomes()[r];
  });
}

double WindowLoss::value_with_extra(const Vector& pi_ext,
                                    const std::vector<std::string>& extra_keys) const {
  const std::size_t n = static_cast<std::size_t>(pi_ext.size());
  return value_impl(pi_ext, n, [&](std::size_t s, std::size_t r) -> const std::string& {
    if (r + 1 == n) return extra_keys[s];
    return states_[s].outcomes()[r];
  });
}

double WindowLoss::value_with_replacement(
    const Vector& pi, std::size_t index,
    const std::vector<std::string>& cand_keys) const {
  const std::size_t n = static_cast<std::size_t>(pi.size());
  return value_impl(pi, n, [&](std::size_t s, std::size_t r) -> const std::string& {
    if (r == index) return cand_keys[s];
    return states_[s].outcomes()[r];
  });
}

Vector WindowLoss::grad_pi(const Vector& pi) const {
  const std::size_t n_rules = static_cast<std::size_t>(pi.size());
  Vector g = Vector::Zero(pi.size());
  if (n_records_ <= 0.0 || counts_.empty()) return g;

  std::map<std::string, double> pbar;
  for (const auto& [m, c] : counts_) pbar[m] = 0.0;
  std::vector<double> zs(states_.size(), 0.0);
  for (std::size_t s = 0; s < states_.size(); ++s) {
    const auto& keys = states_[s].outcomes();
    double z = 0.0;
    for (std::size_t r = 0; r < n_rules; ++r)
      if (!keys[r].empty()) z += pi(r);
    zs[s] = z;
    if (z <= 0.0) continue;
    const double scale = states_[s].n / (n_records_ * z);
    for (std::size_t r = 0; r < n_rules; ++r)
      if (!keys[r].empty()) pbar[keys[r]] += scale * pi(r);
  }
  const double lam = smoothing_;
  const double support = static_cast<double>(pbar.size());
  const double qdenom = total_weight_ + lam * support;
  const double pdenom = 1.0 + lam * support;

  // dF/dpbar(m) = -q(m) / p~(m) / pdenom; p_s(m) = pi_r 1{key(s,r)=m} / z_s.
  std::map<std::string, double> ratio;
  for (const auto& [m, pm] : pbar) {
    auto it = counts_.find(m);
    const double qc = it == counts_.end() ? 0.0 : it->second;
    ratio[m] = ((qc + lam) / qdenom) / ((pm + lam) / pdenom);
  }
  for (std::size_t s = 0; s < states_.size(); ++s) {
    const double z = zs[s];
    if (z <= 0.0) continue;
    const auto& keys = states_[s].outcomes();
    double mix = 0.0;  // sum_m ratio(m) p_s(m)
    for (std::size_t r = 0; r < n_rules; ++r)
      if (!keys[r].empty()) mix += ratio[keys[r]] * pi(r) / z;
    const double coeff = states_[s].n / (n_records_ * pdenom * z);
    for (std::size_t r = 0; r < n_rules; ++r)
      if (!keys[r].empty()) g(r) -= coeff * (ratio[keys[r]] - mix);
  }
  return g;
}

double WindowLoss::observed_entropy() const {
  const double lam = smoothing_;
  const double support = static_cast<double>(counts_.size());
  const double qdenom = total_weight_ + lam * support;
  double h = 0.0;
  for (const auto& [m, c] : counts_) {
    const double q = (c + lam) / qdenom;
    if (q > 0.0) h -= q * std::log(q);
  }
  return h;
}

DistributionLoss WindowLoss::as_distribution_loss() const {
  DistributionLoss loss;
  loss.value = [this](const SimplexVector& p) { return value(p); };
  loss.grad = [this](const SimplexVector& p) { return grad_pi(p); };
  return loss;
}

}  // namespace actpc
