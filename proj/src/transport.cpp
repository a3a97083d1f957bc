#include "actpc/transport.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace actpc {

Matrix RuleGraph::weight_matrix() const {
  Matrix w = Matrix::Zero(n, n);
  for (const Edge& e : edges) {
    w(e.i, e.j) = e.weight;
    w(e.j, e.i) = e.weight;
  }
  return w;
}

namespace {

// Union-find for the connectivity repair pass.
struct DisjointSet {
  std::vector<std::size_t> parent;
  explicit DisjointSet(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

RuleGraph build_rule_graph_from_distances(const Matrix& dist, int k, double sigma) {
  const std::size_t n = static_cast<std::size_t>(dist.rows());
  RuleGraph g;
  g.n = n;
  if (n <= 1) return g;

  if (sigma <= 0.0) {
    std::vector<double> ds;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) ds.push_back(dist(i, j));
    std::sort(ds.begin(), ds.end());
    sigma = ds[ds.size() / 2];
    if (sigma <= 0.0) sigma = 1.0;
  }
  auto weight = [&](std::size_t i, std::size_t j) {
    return std::exp(-dist(i, j) / sigma);
  };

  // k nearest neighbors of each node, ties broken by index.
  const std::size_t kk = std::min<std::size_t>(std::max(k, 1), n - 1);
  std::vector<std::vector<std::size_t>> knn(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) order.push_back(j);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return dist(i, a) < dist(i, b);
    });
    order.resize(kk);
    knn[i] = std::move(order);
  }
  auto is_neighbor = [&](std::size_t i, std::size_t j) {
    return std::find(knn[i].begin(), knn[i].end(), j) != knn[i].end();
  };

  DisjointSet components(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j : knn[i]) {
      if (j < i) continue;
      if (is_neighbor(j, i)) {
        g.edges.push_back({i, j, weight(i, j)});
        components.unite(i, j);
      }
    }
  }

  // Repair connectivity with the cheapest component-crossing edges.
  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      candidates.emplace_back(dist(i, j), i, j);
  std::sort(candidates.begin(), candidates.end());
  for (const auto& [d, i, j] : candidates) {
    if (components.find(i) == components.find(j)) continue;
    if (!is_neighbor(i, j) || !is_neighbor(j, i) || i > j) {
      bool present = std::any_of(g.edges.begin(), g.edges.end(), [&](const RuleGraph::Edge& e) {
        return (e.i == i && e.j == j) || (e.i == j && e.j == i);
      });
      if (!present) g.edges.push_back({i, j, weight(i, j)});
    }
    components.unite(i, j);
  }
  return g;
}

RuleGraph build_rule_graph(const std::vector<RewriteRule>& rules, int k,
                           double sigma) {
  const std::size_t n = rules.size();
  Matrix dist = Matrix::Zero(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      dist(i, j) = dist(j, i) = rule_distance(rules[i], rules[j]);
  return build_rule_graph_from_distances(dist, k, sigma);
}

Matrix laplacian(const RuleGraph& graph, const SimplexVector& p) {
  if (static_cast<std::size_t>(p.size()) != graph.n)
    throw Error("laplacian: distribution not aligned with graph");
  Matrix l = Matrix::Zero(graph.n, graph.n);
  for (const RuleGraph::Edge& e : graph.edges) {
    const double w = e.weight * (p(e.i) + p(e.j));
    l(e.i, e.j) -= w;
    l(e.j, e.i) -= w;
    l(e.i, e.i) += w;
    l(e.j, e.j) += w;
  }
  return l;
}

Matrix pinv(const Matrix& sym, double tol) {
  if (sym.rows() != sym.cols()) throw Error("pinv: matrix must be square");
  if ((sym - sym.transpose()).cwiseAbs().maxCoeff() > 1e-8)
    throw Error("pinv: matrix must be symmetric");
  Eigen::SelfAdjointEigenSolver<Matrix> eig((sym + sym.transpose()) / 2.0);
  const Vector& vals = eig.eigenvalues();
  const Matrix& vecs = eig.eigenvectors();
  const double lmax = vals.cwiseAbs().maxCoeff();
  const double cutoff = tol * std::max(lmax, 1e-300);
  Vector inv = Vector::Zero(vals.size());
  for (Eigen::Index i = 0; i < vals.size(); ++i)
    if (std::abs(vals(i)) > cutoff) inv(i) = 1.0 / vals(i);
  return vecs * inv.asDiagonal() * vecs.transpose();
}

Matrix metric_tensor(const Matrix& jacobian, const Matrix& laplacian_pinv) {
  if (jacobian.rows() != laplacian_pinv.cols())
    throw Error("metric_tensor: dimension mismatch");
  Matrix g = jacobian.transpose() * laplacian_pinv * jacobian;
  return (g + g.transpose()) / 2.0;
}

Vector grad_loss(const RuleParams& params, const DistributionLoss& loss,
                 GradMode mode) {
  const Eigen::Index n = params.logits.size();
  if (mode == GradMode::Analytic) {
    if (!loss.grad) throw Error("grad_loss: loss has no analytic gradient");
    SimplexVector p = rule_probs(params);
    return softmax_jacobian(p).transpose() * loss.grad(p);
  }
  const double step = 1e-5;
  Vector g(n);
  RuleParams probe = params;
  for (Eigen::Index i = 0; i < n; ++i) {
    probe.logits(i) = params.logits(i) + step;
    const double up = loss.value_at_params(probe);
    probe.logits(i) = params.logits(i) - step;
    const double down = loss.value_at_params(probe);
    probe.logits(i) = params.logits(i);
    g(i) = (up - down) / (2.0 * step);
  }
  return g;
}

std::optional<RuleParams> natural_step(const RuleParams& params,
                                       const Vector& grad, const Matrix& G,
                                       double h, double ridge) {
  if (h <= 0.0) throw Error("natural_step: h must be positive");
  Vector delta;
  if (ridge == 0.0 && G.isIdentity(0.0)) {
    delta = grad;  // identity metric: exactly vanilla gradient descent
  } else {
    Matrix m = G;
    m.diagonal().array() += ridge;
    Eigen::LDLT<Matrix> solver(m);
    if (solver.info() != Eigen::Success) return std::nullopt;
    delta = solver.solve(grad);
    if (!delta.allFinite()) return std::nullopt;
  }
  RuleParams out;
  out.logits = params.logits - h * delta;
  return out;
}

ParamLoss to_param_loss(const DistributionLoss& loss) {
  ParamLoss out;
  out.value = [loss](const RuleParams& xi) { return loss.value_at_params(xi); };
  if (loss.grad) {
    out.grad = [loss](const RuleParams& xi) {
      return grad_loss(xi, loss, GradMode::Analytic);
    };
  }
  return out;
}

JkoResult jko_step(const RuleParams& params, const ParamLoss& loss, double h,
                   const Matrix& G, int max_iters) {
  if (h <= 0.0) throw Error("jko_step: h must be positive");
  const Eigen::Index n = params.logits.size();
  const Vector x0 = params.logits;

  auto loss_grad_fd = [&](const Vector& x) -> Vector {
    const double step = 1e-6;
    Vector g(n);
    Vector probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      probe(i) = x(i) + step;
      const double up = loss.value({probe});
      probe(i) = x(i) - step;
      const double down = loss.value({probe});
      probe(i) = x(i);
      g(i) = (up - down) / (2.0 * step);
    }
    return g;
  };
  auto objective = [&](const Vector& x) {
    Vector d = x - x0;
    return loss.value({x}) + d.dot(G * d) / (2.0 * h);
  };
  auto gradient = [&](const Vector& x) -> Vector {
    Vector gf = loss.grad ? loss.grad({x}) : loss_grad_fd(x);
    return gf + G * (x - x0) / h;
  };

  Vector x = x0;
  double fx = objective(x);
  const double f_start = fx;
  bool improved = false;

  for (int it = 0; it < max_iters; ++it) {
    Vector g = gradient(x);
    if (g.norm() < 1e-12) break;
    // Hessian of the proximal objective by central differences of the
    // gradient; exact for quadratic losses.
    Matrix hess(n, n);
    const double fd = 1e-5;
    Vector probe = x;
    for (Eigen::Index i = 0; i < n; ++i) {
      probe(i) = x(i) + fd;
      Vector gp = gradient(probe);
      probe(i) = x(i) - fd;
      Vector gm = gradient(probe);
      probe(i) = x(i);
      hess.col(i) = (gp - gm) / (2.0 * fd);
    }
    hess = (hess + hess.transpose()) / 2.0;

    Vector step;
    double damping = 1e-10;
    for (;;) {
      Matrix m = hess;
      m.diagonal().array() += damping;
      Eigen::LDLT<Matrix> solver(m);
      if (solver.info() == Eigen::Success) {
        step = solver.solve(g);
        if (step.allFinite() && step.dot(g) > 0.0) break;
      }
      damping = std::max(damping * 10.0, 1e-8);
      if (damping > 1e12) {
        step = g;  // steepest descent fallback
        break;
      }
    }

    double alpha = 1.0;
    bool accepted = false;
    for (int bt = 0; bt < 30; ++bt) {
      Vector cand = x - alpha * step;
      double fc = objective(cand);
      if (fc < fx) {
        x = cand;
        fx = fc;
        accepted = true;
        improved = true;
        break;
      }
      alpha /= 2.0;
    }
    if (!accepted) break;
    if (std::abs(fx - f_start) > 0.0 && g.norm() < 1e-10) break;
  }

  if (!improved || fx > f_start) return {params, false};
  return {RuleParams{x}, true};
}

}  // namespace actpc
