#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "hypergcl/graph.hpp"
#include "hypergcl/trainer.hpp"

using namespace hypergcl;
using Eigen::MatrixXd;

namespace {

Graph path_graph(int n, int d = 3, std::uint64_t seed = 1) {
  Graph g;
  g.n = n;
  for (int i = 0; i + 1 < n; ++i) g.edges.emplace_back(i, i + 1);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  g.features.resize(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) g.features(i, j) = nd(rng);
  return g;
}

std::filesystem::path scratch(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / "hypergcl_test_graph";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("normalized adjacency examples") {
  Graph one;
  one.n = 1;
  one.features = MatrixXd::Ones(1, 1);
  CHECK(MatrixXd(normalize_adjacency(one))(0, 0) == 1.0);

  Graph two = path_graph(2);
  MatrixXd a2 = normalize_adjacency(two);
  CHECK((a2.array() - 0.5).abs().maxCoeff() < 1e-15);

  Graph tri = path_graph(3);
  tri.edges.emplace_back(2, 0);
  tri.edges.emplace_back(0, 2);  // duplicate in the other direction
  tri.edges.emplace_back(1, 1);  // self-loop
  MatrixXd a3 = normalize_adjacency(tri);
  CHECK((a3.array() - 1.0 / 3.0).abs().maxCoeff() < 1e-15);
}

TEST_CASE("normalized adjacency is symmetric with spectral radius at most one") {
  SyntheticSpec spec;
  spec.kind = SyntheticKind::kSbm;
  spec.block_sizes = {30, 30, 30};
  spec.p_in = 0.3;
  spec.p_out = 0.05;
  Graph g = make_synthetic(spec);
  MatrixXd a = normalize_adjacency(g);
  CHECK((a - a.transpose()).norm() < 1e-15);
  Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(g.n, 1.0, 2.0);
  double lambda = 0.0;
  for (int k = 0; k < 2000; ++k) {
    Eigen::VectorXd w = a * v;
    lambda = w.norm() / v.norm();
    v = w / w.norm();
  }
  CHECK(lambda <= 1.0 + 1e-9);
  CHECK(lambda > 0.99);
}

TEST_CASE("graph validation") {
  Graph g = path_graph(3);
  g.edges.emplace_back(0, 3);
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
  Graph h = path_graph(3);
  h.features(1, 1) = std::nan("");
  CHECK_THROWS_AS(h.validate(), std::invalid_argument);
}

TEST_CASE("augmentation") {
  Graph g = path_graph(20);
  Graph same = augment(g, {0.0, 0.0, 5});
  CHECK(same.edges == g.edges);
  CHECK(same.features == g.features);

  Graph bare = augment(g, {1.0 - 1e-9, 0.0, 5});
  CHECK(bare.edges.empty());
  CHECK(bare.features == g.features);

  AugmentationConfig cfg{0.3, 0.3, 17};
  Graph a = augment(g, cfg), b = augment(g, cfg);
  CHECK(a.edges == b.edges);
  CHECK(a.features == b.features);
  CHECK(a.n == g.n);
  for (int i = 0; i < g.n; ++i) {
    if (a.features.row(i).isZero(0.0)) {
      for (auto [u, v] : a.edges) CHECK((u != i && v != i));
    } else {
      CHECK(a.features.row(i) == g.features.row(i));
    }
  }
  CHECK_THROWS_AS(augment(g, {1.0, 0.0, 0}), std::invalid_argument);
}

TEST_CASE("encoder outputs") {
  Curvature c(1.0);
  Graph g = path_graph(6);
  GcnParams p = GcnParams::init(3, 8, 4, 3);
  CHECK(p.bias1.isZero(0.0));
  CHECK(p.slope1 == 0.25);

  Graph zero = g;
  zero.features.setZero();
  CHECK(encode(zero, p, c).isZero(0.0));

  // Edgeless graph, small weights: the projection leaves every row unchanged.
  Graph iso = g;
  iso.edges.clear();
  GcnParams small = p;
  small.theta1 *= 0.01;
  small.theta2 *= 0.01;
  MatrixXd z = encode(iso, small, c);
  MatrixXd h1 = iso.features * small.theta1;
  h1 = h1.cwiseMax(0.0) + 0.25 * h1.cwiseMin(0.0);
  MatrixXd h2 = h1 * small.theta2;
  h2 = h2.cwiseMax(0.0) + 0.25 * h2.cwiseMin(0.0);
  CHECK((z - h2).norm() < 1e-15);

  GcnParams big = p;
  big.theta1 *= 100.0;
  big.theta2 *= 100.0;
  for (double cv : {1.0, 0.25}) {
    MatrixXd zb = encode(g, big, Curvature(cv));
    for (Eigen::Index i = 0; i < zb.rows(); ++i) {
      CHECK(zb.row(i).norm() == doctest::Approx((1.0 - kDefaultEps) / std::sqrt(cv)).epsilon(1e-14));
    }
  }
}

TEST_CASE("encoder is permutation equivariant") {
  Curvature c(1.0);
  Graph g = path_graph(9, 4, 2);
  g.edges.emplace_back(0, 5);
  g.edges.emplace_back(3, 8);
  GcnParams p = GcnParams::init(4, 16, 5, 4);
  p.bias1.setConstant(0.1);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), std::mt19937_64(6));
  Graph h;
  h.n = 9;
  h.features.resize(9, 4);
  for (int i = 0; i < 9; ++i) h.features.row(perm[static_cast<std::size_t>(i)]) = g.features.row(i);
  for (auto [u, v] : g.edges) h.edges.emplace_back(perm[static_cast<std::size_t>(u)], perm[static_cast<std::size_t>(v)]);
  MatrixXd zg = encode(g, p, c), zh = encode(h, p, c);
  for (int i = 0; i < 9; ++i) CHECK((zh.row(perm[static_cast<std::size_t>(i)]) - zg.row(i)).norm() < 1e-13);
}

TEST_CASE("encoder gradients pass finite differences") {
  Curvature c(1.0);
  Graph g = path_graph(7, 3, 9);
  auto adj = normalize_adjacency(g);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    GcnParams p = GcnParams::init(3, 6, 4, seed);
    p.theta1 *= 0.5;
    auto f1 = [&](ad::Tape& t, ad::Var th) {
      GcnVars v = GcnVars::on(t, p);
      v.theta1 = th;
      return ad::sum(ad::square(encode(adj, t.constant(g.features), v, c)));
    };
    auto f2 = [&](ad::Tape& t, ad::Var th) {
      GcnVars v = GcnVars::on(t, p);
      v.theta2 = th;
      return ad::sum(ad::square(encode(adj, t.constant(g.features), v, c)));
    };
    CHECK(ad::finite_diff_check(f1, p.theta1) < 1e-5);
    CHECK(ad::finite_diff_check(f2, p.theta2) < 1e-5);
  }
}

TEST_CASE("parameter validation") {
  GcnParams p = GcnParams::init(3, 4, 2, 0);
  CHECK_NOTHROW(p.validate());
  GcnParams bad = p;
  bad.theta2 = MatrixXd::Ones(5, 2);
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  CHECK(GcnParams::init(3, 4, 2, 0).theta1 == p.theta1);
}

TEST_CASE("dataset files round trip") {
  auto edges = scratch("edges.txt");
  auto feats = scratch("features.csv");
  auto labels = scratch("labels.csv");
  auto splits = scratch("splits.json");
  std::ofstream(edges) << "# comment\n0 1\n1 2\n\n2 3\n";
  std::ofstream(feats) << "a,b\n1,2\n3,4\n5,6\n7,8\n";
  std::ofstream(labels) << "label\n0\n0\n1\n1\n";
  std::ofstream(splits) << R"({"train": [0, 2], "val": [1], "test": [3]})";
  CHECK(read_edge_list(edges.string()) == std::vector<std::pair<int, int>>{{0, 1}, {1, 2}, {2, 3}});
  MatrixXd f = read_features_csv(feats.string());
  CHECK(f.rows() == 4);
  CHECK(f(3, 1) == 8.0);
  CHECK(read_labels_csv(labels.string(), 4) == std::vector<int>{0, 0, 1, 1});
  Splits s = read_splits_json(splits.string());
  CHECK(s.train == std::vector<int>{0, 2});
  CHECK(s.test == std::vector<int>{3});

  std::ofstream(edges) << "0 x\n";
  CHECK_THROWS_AS(read_edge_list(edges.string()), std::runtime_error);
  std::ofstream(feats) << "a,b\n1,2\n3\n";
  CHECK_THROWS_AS(read_features_csv(feats.string()), std::runtime_error);
  CHECK_THROWS_AS(read_edge_list(scratch("missing.txt").string()), std::runtime_error);
}

TEST_CASE("matrix csv round trip is exact") {
  MatrixXd m(2, 2);
  m << 0.1, -1.0 / 3.0, 1e-300, 12345.678;
  std::ostringstream os;
  write_matrix_csv(os, m);
  auto path = scratch("m.csv");
  std::ofstream(path) << os.str();
  CHECK(read_matrix_csv(path.string()) == m);
}
