#include <doctest.h>

#include <cmath>
#include <random>

#include "hypergcl/batch_geometry.hpp"
#include "hypergcl/losses.hpp"
#include "hypergcl/spectral.hpp"

using namespace hypergcl;
using ad::Matrix;
using ad::Tape;
using ad::Var;

namespace {

Matrix in_ball(std::mt19937_64& rng, int n, int d, double c, double scale = 0.3) {
  std::normal_distribution<double> g(0.0, scale);
  Matrix y(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) y(i, j) = g(rng);
  Tape t;
  return batch::exp0(t.constant(y), Curvature(c)).value();
}

// Points whose log0 preimages have exactly zero mean and identity covariance.
Matrix standard_moments(int d, double c) {
  const int n = 2 * d;
  Matrix y = Matrix::Zero(n, d);
  for (int k = 0; k < d; ++k) {
    y(2 * k, k) = std::sqrt(static_cast<double>(d));
    y(2 * k + 1, k) = -std::sqrt(static_cast<double>(d));
  }
  Tape t;
  return batch::exp0(t.constant(y), Curvature(c)).value();
}

}  // namespace

TEST_CASE("loss weights and variant names") {
  CHECK_THROWS_AS(LossWeights(-1.0, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(LossWeights(1.0, 0.0), std::invalid_argument);
  for (auto v : {LossVariant::kEuclidean, LossVariant::kTangentEuclidean, LossVariant::kHyperbolicAlignOnly,
                 LossVariant::kHyperbolicNaive, LossVariant::kHyperGcl}) {
    CHECK(parse_variant(to_string(v)) == v);
  }
  CHECK(parse_variant("hyperbolic-align-only") == LossVariant::kHyperbolicAlignOnly);
  CHECK_THROWS_AS(parse_variant("hyperbolic"), std::invalid_argument);
}

TEST_CASE("hyperbolic alignment") {
  Curvature c(1.0);
  std::mt19937_64 rng(1);
  Tape t;
  Matrix z = in_ball(rng, 6, 3, 1.0), w = in_ball(rng, 6, 3, 1.0);
  CHECK(losses::alignment_hyperbolic(t.constant(z), t.constant(z), c).scalar() == 0.0);
  Matrix p(1, 2), q(1, 2);
  p << 0.5, 0.0;
  q << -0.5, 0.0;
  CHECK(losses::alignment_hyperbolic(t.constant(p), t.constant(q), c).scalar() ==
        doctest::Approx(2.19722457733621938).epsilon(1e-14));
  const double ab = losses::alignment_hyperbolic(t.constant(z), t.constant(w), c).scalar();
  const double ba = losses::alignment_hyperbolic(t.constant(w), t.constant(z), c).scalar();
  CHECK(ab > 0.0);
  CHECK(ab == doctest::Approx(ba).epsilon(1e-13));
  CHECK_THROWS_AS(losses::alignment_hyperbolic(t.constant(z), t.constant(Matrix(w.topRows(4))), c),
                  std::invalid_argument);
}

TEST_CASE("isotropy examples") {
  Curvature c(1.0);
  Tape t;
  Matrix s = standard_moments(3, 1.0);
  CHECK(std::abs(losses::isotropy_tangent(t.constant(s), t.constant(s), c, TangentTarget::standard(3), 0.0)
                     .scalar()) < 1e-12);
  // Tangent points +-sqrt(2) e_k give Sigma = diag(2, 2).
  Matrix y(4, 2);
  y << 2.0, 0.0, -2.0, 0.0, 0.0, 2.0, 0.0, -2.0;
  Matrix z = batch::exp0(t.constant(y), c).value();
  CHECK(losses::isotropy_tangent(t.constant(z), t.constant(z), c, TangentTarget::standard(2), 0.0).scalar() ==
        doctest::Approx(1.2274112777602188).epsilon(1e-12));
}

TEST_CASE("isotropy decomposes into two KL terms") {
  Curvature c(0.7);
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    Matrix z = in_ball(rng, 10, 3, 0.7, 0.8), w = in_ball(rng, 10, 3, 0.7, 0.8);
    Tape t;
    const double iso = losses::isotropy_tangent(t.constant(z), t.constant(w), c).scalar();
    CHECK(iso == doctest::Approx(gaussian_kl(tangent_moments(z, c)) + gaussian_kl(tangent_moments(w, c)))
                     .epsilon(1e-12));
    CHECK(iso >= 0.0);
  }
}

TEST_CASE("naive hyperbolic uniformity") {
  Curvature c(1.0);
  Tape t;
  Matrix same = Matrix::Constant(4, 2, 0.2);
  CHECK(losses::uniformity_hyperbolic_naive(t.constant(same), 2.0, c).scalar() == 0.0);
  Matrix pair(2, 2);
  pair << 0.99, 0.0, -0.99, 0.0;
  const double d = poincare::distance(Eigen::Vector2d(0.99, 0.0), Eigen::Vector2d(-0.99, 0.0), 1.0);
  CHECK(losses::uniformity_hyperbolic_naive(t.constant(pair), 1.0, c).scalar() ==
        doctest::Approx(-d).epsilon(1e-12));
  Matrix near = 0.1 * pair, far = 0.5 * pair;
  CHECK(losses::uniformity_hyperbolic_naive(t.constant(far), 2.0, c).scalar() <
        losses::uniformity_hyperbolic_naive(t.constant(near), 2.0, c).scalar());
  CHECK_THROWS_AS(losses::uniformity_hyperbolic_naive(t.constant(Matrix(pair.topRows(1))), 2.0, c),
                  std::invalid_argument);
}

TEST_CASE("Euclidean alignment and uniformity") {
  Tape t;
  Matrix u(2, 3);
  u << 3.0, 0.0, 0.0, 0.0, 0.5, 0.0;
  auto terms = losses::euclidean_align_uniform(t.constant(u), t.constant(u), 2.0);
  CHECK(terms.align.scalar() == 0.0);
  CHECK(terms.uniform.scalar() == doctest::Approx(-4.0).epsilon(1e-14));
}

TEST_CASE("loss gradients pass finite differences") {
  std::mt19937_64 rng(3);
  const Curvature c(0.9);
  for (int k = 0; k < 5; ++k) {
    Matrix z = in_ball(rng, 8, 3, 0.9, 0.6), w = in_ball(rng, 8, 3, 0.9, 0.6);
    auto with_w = [&](auto fn) { return [&, fn](Tape& t, Var x) { return fn(x, t.constant(w)); }; };
    CHECK(ad::finite_diff_check(with_w([&](Var a, Var b) { return losses::alignment_hyperbolic(a, b, c); }), z) < 1e-5);
    CHECK(ad::finite_diff_check(with_w([&](Var a, Var b) { return losses::isotropy_tangent(a, b, c); }), z) < 1e-5);
    CHECK(ad::finite_diff_check([&](Tape&, Var x) { return losses::uniformity_hyperbolic_naive(x, 2.0, c); }, z) < 1e-5);
    CHECK(ad::finite_diff_check(with_w([&](Var a, Var b) {
            auto e = losses::euclidean_align_uniform(a, b, 2.0);
            return e.align + e.uniform;
          }), z) < 1e-5);
    for (auto v : {LossVariant::kEuclidean, LossVariant::kTangentEuclidean, LossVariant::kHyperbolicAlignOnly,
                   LossVariant::kHyperbolicNaive, LossVariant::kHyperGcl}) {
      INFO(to_string(v));
      CHECK(ad::finite_diff_check(with_w([&](Var a, Var b) {
              return losses::total_loss(a, b, LossWeights(1.0, 2.0), c, v).total;
            }), z) < 1e-5);
    }
  }
}

TEST_CASE("total loss composition") {
  std::mt19937_64 rng(4);
  Curvature c(1.0);
  Tape t;
  Matrix z = in_ball(rng, 8, 3, 1.0), w = in_ball(rng, 8, 3, 1.0);
  Var a = t.constant(z), b = t.constant(w);
  CHECK(losses::total_loss(a, a, LossWeights(), c, LossVariant::kHyperbolicAlignOnly).total.scalar() == 0.0);
  const double align = losses::alignment_hyperbolic(a, b, c).scalar();
  for (auto v : {LossVariant::kHyperbolicAlignOnly, LossVariant::kHyperbolicNaive, LossVariant::kHyperGcl}) {
    CHECK(losses::total_loss(a, b, LossWeights(0.0, 2.0), c, v).total.scalar() == doctest::Approx(align).epsilon(1e-14));
  }
  auto eu = losses::euclidean_align_uniform(a, b, 2.0);
  CHECK(losses::total_loss(a, b, LossWeights(0.0, 2.0), c, LossVariant::kEuclidean).total.scalar() ==
        doctest::Approx(eu.align.scalar()).epsilon(1e-14));
  auto full = losses::total_loss(a, b, LossWeights(0.5, 2.0), c, LossVariant::kHyperGcl);
  CHECK(full.total.scalar() == doctest::Approx(align + 0.5 * losses::isotropy_tangent(a, b, c).scalar()).epsilon(1e-13));

  // Standard tangent moments in both views: only the alignment term remains.
  Matrix s = standard_moments(3, 1.0);
  Matrix s2 = s;
  s2.row(0).swap(s2.row(1));
  Var sa = t.constant(s), sb = t.constant(s2);
  auto hg = losses::total_loss(sa, sb, LossWeights(1.0, 2.0), c, LossVariant::kHyperGcl);
  CHECK(hg.total.scalar() ==
        doctest::Approx(losses::alignment_hyperbolic(sa, sb, c).scalar() + hg.regularizer.scalar()).epsilon(1e-13));
  CHECK(std::abs(hg.regularizer.scalar()) < 1e-4);
}

TEST_CASE("alignment-only descent on free points collapses them" * doctest::should_fail()) {
  // Known failure: paired views converge to each other, but the pairs stay spread out.
  // Erank stays near 7.7 of 8, far above 1.2.
  std::mt19937_64 rng(5);
  Curvature c(1.0);
  Matrix z = in_ball(rng, 32, 8, 1.0, 0.4);
  Matrix w = in_ball(rng, 32, 8, 1.0, 0.4);
  for (int step = 0; step < 500; ++step) {
    Tape t;
    Var a = t.variable(z), b = t.variable(w);
    t.backward(losses::alignment_hyperbolic(a, b, c));
    z -= 0.1 * a.grad();
    w -= 0.1 * b.grad();
  }
  MESSAGE("erank after 500 steps: " << effective_rank(z) << ", mean pair gap " << (z - w).rowwise().norm().mean());
  CHECK(effective_rank(z) <= 1.2);
}
