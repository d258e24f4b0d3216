#include "hypergcl/losses.hpp"

#include <limits>
#include <stdexcept>

#include "hypergcl/batch_geometry.hpp"

namespace hypergcl {

LossWeights::LossWeights(double lambda_u, double t) : lambda_u_(lambda_u), t_(t) {
  if (!(lambda_u >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
  if (!(t > 0.0)) throw std::invalid_argument("temperature must be positive");
}

LossVariant parse_variant(std::string_view name) {
  if (name == "euclidean") return LossVariant::kEuclidean;
  if (name == "tangent-euclidean") return LossVariant::kTangentEuclidean;
  if (name == "hyperbolic-align-only") return LossVariant::kHyperbolicAlignOnly;
  if (name == "hyperbolic-naive-uniformity") return LossVariant::kHyperbolicNaive;
  if (name == "hypergcl") return LossVariant::kHyperGcl;
  throw std::invalid_argument("unknown loss variant: " + std::string(name));
}

std::string_view to_string(LossVariant v) {
  switch (v) {
    case LossVariant::kEuclidean: return "euclidean";
    case LossVariant::kTangentEuclidean: return "tangent-euclidean";
    case LossVariant::kHyperbolicAlignOnly: return "hyperbolic-align-only";
    case LossVariant::kHyperbolicNaive: return "hyperbolic-naive-uniformity";
    case LossVariant::kHyperGcl: return "hypergcl";
  }
  return "unknown";
}

namespace losses {

namespace {

void require_paired(Var z, Var z_prime) {
  if (z.rows() != z_prime.rows() || z.cols() != z_prime.cols()) {
    throw std::invalid_argument("views must have the same number of paired rows");
  }
}

// Rows with norm below 1e-12 (dropped nodes) are divided by 1e-12 instead.
Var normalize_rows(Var z) {
  return z / ad::clamp(ad::row_norm(z), 1e-12, std::numeric_limits<double>::infinity());
}

}  // namespace

Var alignment_hyperbolic(Var z, Var z_prime, const Curvature& c) {
  require_paired(z, z_prime);
  return ad::mean(batch::distance(z, z_prime, c));
}

Var isotropy_tangent(Var z, Var z_prime, const Curvature& c, const TangentTarget& target,
                     double jitter) {
  require_paired(z, z_prime);
  const auto m = spectral_ops::tangent_moments(z, c);
  const auto mp = spectral_ops::tangent_moments(z_prime, c);
  return spectral_ops::gaussian_kl(m, target, jitter) +
         spectral_ops::gaussian_kl(mp, target, jitter);
}

Var isotropy_tangent(Var z, Var z_prime, const Curvature& c) {
  return isotropy_tangent(z, z_prime, c, TangentTarget::standard(z.cols()));
}

Var uniformity_hyperbolic_naive(Var z, double t, const Curvature& c) {
  const Eigen::Index n = z.rows();
  if (n < 2) throw std::invalid_argument("uniformity needs at least 2 points");
  const ad::Matrix off = ad::Matrix::Ones(n, n) - ad::Matrix::Identity(n, n);
  return ad::log_mean_exp(-t * batch::pairwise_distance(z, c), off);
}

EuclideanTerms euclidean_align_uniform(Var z, Var z_prime, double t) {
  require_paired(z, z_prime);
  const Eigen::Index n = z.rows();
  if (n < 2) throw std::invalid_argument("uniformity needs at least 2 points");
  Var u = normalize_rows(z);
  Var v = normalize_rows(z_prime);
  Var align = ad::mean(ad::row_sum(ad::square(u - v)));
  // |u_i - u_j|^2 = 2 - 2 <u_i, u_j> on the unit sphere.
  Var sq = 2.0 - 2.0 * ad::matmul(u, ad::transpose(u));
  const ad::Matrix off = ad::Matrix::Ones(n, n) - ad::Matrix::Identity(n, n);
  Var uniform = ad::log_mean_exp(-t * sq, off);
  return {align, uniform};
}

LossTerms total_loss(Var z, Var z_prime, const LossWeights& w, const Curvature& c,
                     LossVariant variant, const TangentTarget& target) {
  ad::Tape& tape = z.tape();
  const double lam = w.lambda_u();
  switch (variant) {
    case LossVariant::kEuclidean: {
      auto e = euclidean_align_uniform(z, z_prime, w.t());
      return {e.align + lam * e.uniform, e.align, e.uniform};
    }
    case LossVariant::kTangentEuclidean: {
      auto e = euclidean_align_uniform(batch::log0(z, c), batch::log0(z_prime, c), w.t());
      return {e.align + lam * e.uniform, e.align, e.uniform};
    }
    case LossVariant::kHyperbolicAlignOnly: {
      Var a = alignment_hyperbolic(z, z_prime, c);
      return {a, a, tape.constant(0.0)};
    }
    case LossVariant::kHyperbolicNaive: {
      Var a = alignment_hyperbolic(z, z_prime, c);
      Var u = uniformity_hyperbolic_naive(z, w.t(), c);
      return {a + lam * u, a, u};
    }
    case LossVariant::kHyperGcl: {
      Var a = alignment_hyperbolic(z, z_prime, c);
      Var iso = isotropy_tangent(z, z_prime, c, target);
      return {a + lam * iso, a, iso};
    }
  }
  throw std::invalid_argument("unknown loss variant");
}

LossTerms total_loss(Var z, Var z_prime, const LossWeights& w, const Curvature& c,
                     LossVariant variant) {
  return total_loss(z, z_prime, w, c, variant, TangentTarget::standard(z.cols()));
}

}  // namespace losses

}  // namespace hypergcl
