#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "hypergcl/autodiff.hpp"
#include "hypergcl/geometry.hpp"

namespace hypergcl {

struct Splits {
  std::vector<int> train;
  std::vector<int> val;
  std::vector<int> test;
};

/// Undirected graph with node features and optional labels/splits.
struct Graph {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  Eigen::MatrixXd features;
  std::optional<std::vector<int>> labels;
  std::optional<Splits> splits;

  /// Throws std::invalid_argument when an invariant is violated.
  void validate() const;
  int num_classes() const;
};

/// D^-1/2 (A + I) D^-1/2 with D the degree matrix of A + I. Duplicate edges and
/// self-loops in the edge list collapse to a single entry.
Eigen::SparseMatrix<double> normalize_adjacency(const Graph& g);

struct AugmentationConfig {
  double edge_drop_prob = 0.2;
  double node_drop_prob = 0.1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Random view: each node is dropped (features zeroed, incident edges removed)
/// with node_drop_prob, then each surviving edge with edge_drop_prob. Node
/// indices are preserved so views stay paired.
Graph augment(const Graph& g, const AugmentationConfig& cfg);

struct GcnParams {
  Eigen::MatrixXd theta1;  // d_x x d_h
  Eigen::MatrixXd theta2;  // d_h x d_out
  Eigen::RowVectorXd bias1;  // 1 x d_h
  Eigen::RowVectorXd bias2;  // 1 x d_out
  double slope1 = 0.25;
  double slope2 = 0.25;

  /// Glorot-uniform weights, zero biases, PReLU slopes at 0.25.
  static GcnParams init(Eigen::Index d_x, Eigen::Index d_h, Eigen::Index d_out,
                        std::uint64_t seed);
  void validate() const;
};

/// Parameters of a GcnParams recorded as tape leaves.
struct GcnVars {
  ad::Var theta1;
  ad::Var theta2;
  ad::Var bias1;
  ad::Var bias2;
  ad::Var slope1;
  ad::Var slope2;

  static GcnVars on(ad::Tape& tape, const GcnParams& p);
};

/// Two-layer GCN, PReLU(A X W + b) per layer, then projection into the eps-margin ball.
ad::Var encode(const Eigen::SparseMatrix<double>& adj, ad::Var features, const GcnVars& params,
               const Curvature& c, double eps = kDefaultEps);

/// Value-level encoding of a whole graph.
Eigen::MatrixXd encode(const Graph& g, const GcnParams& params, const Curvature& c,
                       double eps = kDefaultEps);

// Dataset ingestion.
std::vector<std::pair<int, int>> read_edge_list(const std::string& path);
Eigen::MatrixXd read_features_csv(const std::string& path);
std::vector<int> read_labels_csv(const std::string& path, int n);
Splits read_splits_json(const std::string& path);
/// Numeric CSV without a header, one row per line.
Eigen::MatrixXd read_matrix_csv(const std::string& path);
void write_matrix_csv(std::ostream& os, const Eigen::MatrixXd& m);

}  // namespace hypergcl
