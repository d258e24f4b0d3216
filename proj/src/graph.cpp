#include "hypergcl/graph.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "hypergcl/batch_geometry.hpp"

namespace hypergcl {

void Graph::validate() const {
  if (n < 0) throw std::invalid_argument("graph: negative node count");
  for (const auto& [u, v] : edges) {
    if (u < 0 || u >= n || v < 0 || v >= n) {
      throw std::invalid_argument("graph: edge index out of range");
    }
  }
  if (features.rows() != n) throw std::invalid_argument("graph: feature rows != node count");
  if (!features.allFinite()) throw std::invalid_argument("graph: non-finite features");
  if (labels && static_cast<int>(labels->size()) != n) {
    throw std::invalid_argument("graph: label count != node count");
  }
  if (splits) {
    for (const auto* part : {&splits->train, &splits->val, &splits->test}) {
      for (int i : *part) {
        if (i < 0 || i >= n) throw std::invalid_argument("graph: split index out of range");
      }
    }
  }
}

int Graph::num_classes() const {
  if (!labels || labels->empty()) return 0;
  return *std::max_element(labels->begin(), labels->end()) + 1;
}

Eigen::SparseMatrix<double> normalize_adjacency(const Graph& g) {
  std::set<std::pair<int, int>> uniq;
  for (int i = 0; i < g.n; ++i) uniq.emplace(i, i);
  for (const auto& [u, v] : g.edges) {
    if (u < 0 || u >= g.n || v < 0 || v >= g.n) {
      throw std::invalid_argument("graph: edge index out of range");
    }
    uniq.emplace(u, v);
    uniq.emplace(v, u);
  }
  std::vector<double> degree(static_cast<std::size_t>(g.n), 0.0);
  for (const auto& [u, v] : uniq) degree[static_cast<std::size_t>(u)] += 1.0;
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(uniq.size());
  for (const auto& [u, v] : uniq) {
    triplets.emplace_back(u, v,
                          1.0 / std::sqrt(degree[static_cast<std::size_t>(u)] *
                                          degree[static_cast<std::size_t>(v)]));
  }
  Eigen::SparseMatrix<double> a(g.n, g.n);
  a.setFromTriplets(triplets.begin(), triplets.end());
  return a;
}

void AugmentationConfig::validate() const {
  if (!(edge_drop_prob >= 0.0 && edge_drop_prob < 1.0)) {
    throw std::invalid_argument("edge_drop_prob must lie in [0, 1)");
  }
  if (!(node_drop_prob >= 0.0 && node_drop_prob < 1.0)) {
    throw std::invalid_argument("node_drop_prob must lie in [0, 1)");
  }
}

Graph augment(const Graph& g, const AugmentationConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Graph out;
  out.n = g.n;
  out.features = g.features;
  out.labels = g.labels;
  out.splits = g.splits;
  std::vector<bool> dropped(static_cast<std::size_t>(g.n), false);
  for (int i = 0; i < g.n; ++i) {
    if (unif(rng) < cfg.node_drop_prob) {
      dropped[static_cast<std::size_t>(i)] = true;
      out.features.row(i).setZero();
    }
  }
  out.edges.reserve(g.edges.size());
  for (const auto& e : g.edges) {
    // Draw for every edge so the edge stream does not depend on node drops.
    const bool drop_edge = unif(rng) < cfg.edge_drop_prob;
    if (drop_edge || dropped[static_cast<std::size_t>(e.first)] ||
        dropped[static_cast<std::size_t>(e.second)]) {
      continue;
    }
    out.edges.push_back(e);
  }
  return out;
}

GcnParams GcnParams::init(Eigen::Index d_x, Eigen::Index d_h, Eigen::Index d_out,
                          std::uint64_t seed) {
  if (d_x < 1 || d_h < 1 || d_out < 1) throw std::invalid_argument("GCN dims must be positive");
  std::mt19937_64 rng(seed);
  auto glorot = [&rng](Eigen::Index rows, Eigen::Index cols) {
    const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
    std::uniform_real_distribution<double> u(-limit, limit);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = u(rng);
    }
    return m;
  };
  GcnParams p;
  p.theta1 = glorot(d_x, d_h);
  p.theta2 = glorot(d_h, d_out);
  p.bias1 = Eigen::RowVectorXd::Zero(d_h);
  p.bias2 = Eigen::RowVectorXd::Zero(d_out);
  return p;
}

void GcnParams::validate() const {
  if (theta1.cols() != theta2.rows()) throw std::invalid_argument("GCN weight shapes do not chain");
  if (bias1.size() != theta1.cols() || bias2.size() != theta2.cols()) {
    throw std::invalid_argument("GCN bias sizes do not match layer widths");
  }
  if (!theta1.allFinite() || !theta2.allFinite() || !bias1.allFinite() || !bias2.allFinite() ||
      !std::isfinite(slope1) ||
      !std::isfinite(slope2)) {
    throw std::invalid_argument("GCN parameters must be finite");
  }
}

GcnVars GcnVars::on(ad::Tape& tape, const GcnParams& p) {
  p.validate();
  return {tape.variable(p.theta1), tape.variable(p.theta2),
          tape.variable(Eigen::MatrixXd(p.bias1)), tape.variable(Eigen::MatrixXd(p.bias2)),
          tape.variable(Eigen::MatrixXd::Constant(1, 1, p.slope1)),
          tape.variable(Eigen::MatrixXd::Constant(1, 1, p.slope2))};
}

ad::Var encode(const Eigen::SparseMatrix<double>& adj, ad::Var features, const GcnVars& params,
               const Curvature& c, double eps) {
  if (adj.rows() != features.rows() || adj.cols() != features.rows()) {
    throw std::invalid_argument("encode: adjacency does not match feature rows");
  }
  if (features.cols() != params.theta1.rows() || params.theta1.cols() != params.theta2.rows()) {
    throw std::invalid_argument("encode: parameter shapes do not chain with features");
  }
  ad::Var h = ad::prelu(ad::spmm(adj, ad::matmul(features, params.theta1)) + params.bias1,
                        params.slope1);
  ad::Var out = ad::prelu(ad::spmm(adj, ad::matmul(h, params.theta2)) + params.bias2,
                          params.slope2);
  return batch::project(out, c, eps);
}

Eigen::MatrixXd encode(const Graph& g, const GcnParams& params, const Curvature& c, double eps) {
  ad::Tape tape;
  const GcnVars vars = GcnVars::on(tape, params);
  return encode(normalize_adjacency(g), tape.constant(g.features), vars, c, eps).value();
}

}  // namespace hypergcl
