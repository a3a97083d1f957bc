#pragma once

#include <functional>
#include <optional>

#include "actpc/belief.hpp"

namespace actpc {

/// Ground-metric graph over the rule population. Symmetric positive edge
/// weights, no self edges, connected by construction.
struct RuleGraph {
  std::size_t n = 0;
  struct Edge {
    std::size_t i, j;
    double weight;  // omega_ij > 0
  };
  std::vector<Edge> edges;

  Matrix weight_matrix() const;
};

/// Mutual-kNN graph under rule_distance with conductance weights
/// omega_ij = exp(-d_ij / sigma). sigma <= 0 selects the median pairwise
/// distance. Disconnected graphs are repaired with a minimum spanning set of
/// extra edges using the same weight formula.
RuleGraph build_rule_graph(const std::vector<RewriteRule>& rules, int k,
                           double sigma);

/// As build_rule_graph but from a precomputed distance matrix.
RuleGraph build_rule_graph_from_distances(const Matrix& dist, int k, double sigma);

/// Measure-dependent Laplacian: L = D~ - W~ with W~_ij = omega_ij (p_i+p_j),
/// so (L phi)_i = sum_j omega_ij (p_i+p_j)(phi_i - phi_j). Symmetric PSD,
/// constants in the kernel.
Matrix laplacian(const RuleGraph& graph, const SimplexVector& p);

/// Spectral pseudoinverse: eigenvalues above tol * lambda_max are inverted,
/// the rest zeroed. Throws Error on a non-symmetric input.
Matrix pinv(const Matrix& sym, double tol = 1e-10);

/// G = J^T L^dagger J, symmetrized against roundoff.
Matrix metric_tensor(const Matrix& jacobian, const Matrix& laplacian_pinv);

/// Loss over the rule distribution p; grad is dF/dp. Parameter-space values
/// compose with softmax.
struct DistributionLoss {
  std::function<double(const SimplexVector&)> value;
  std::function<Vector(const SimplexVector&)> grad;  // may be null

  double value_at_params(const RuleParams& xi) const {
    return value(rule_probs(xi));
  }
};

/// Loss directly over parameters xi (used by the proximal step).
struct ParamLoss {
  std::function<double(const RuleParams&)> value;
  std::function<Vector(const RuleParams&)> grad;  // may be null
};

/// View a distribution loss as a parameter loss via the softmax map.
ParamLoss to_param_loss(const DistributionLoss& loss);

enum class GradMode { Analytic, FiniteDifference };

/// Parameter-space gradient of F(p(xi)). Analytic mode composes dF/dp with
/// the softmax Jacobian; finite-difference mode uses central differences
/// with step 1e-5.
Vector grad_loss(const RuleParams& params, const DistributionLoss& loss,
                 GradMode mode);

/// Solves (G + ridge I) delta = grad and steps xi - h * delta. With G = I and
/// ridge = 0 this is exactly vanilla gradient descent. Returns nullopt when
/// the solve fails (step-rejected signal).
std::optional<RuleParams> natural_step(const RuleParams& params,
                                       const Vector& grad, const Matrix& G,
                                       double h, double ridge);

struct JkoResult {
  RuleParams params;
  bool progressed = false;  // objective strictly improved over xi_k
};

/// Proximal (backward Euler) step: minimizes F(xi) plus the local metric
/// quadratic form (xi-xi_k)^T G (xi-xi_k) / (2h) by damped Newton with
/// backtracking, at most max_iters iterations. Never returns a point with a
/// larger proximal objective than xi_k.
JkoResult jko_step(const RuleParams& params, const ParamLoss& loss, double h,
                   const Matrix& G, int max_iters = 20);

}  // namespace actpc
