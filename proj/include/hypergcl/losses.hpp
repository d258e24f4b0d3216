#pragma once

#include <string>
#include <string_view>

#include "hypergcl/autodiff.hpp"
#include "hypergcl/geometry.hpp"
#include "hypergcl/spectral.hpp"

namespace hypergcl {

/// lambda_u weights the uniformity/isotropy term; t is the uniformity temperature.
class LossWeights {
 public:
  LossWeights(double lambda_u = 1.0, double t = 2.0);
  double lambda_u() const { return lambda_u_; }
  double t() const { return t_; }

 private:
  double lambda_u_;
  double t_;
};

/// Ablation rows: which alignment and which uniformity term make up the objective.
enum class LossVariant {
  kEuclidean,            // Euclidean align + uniform on l2-normalized ambient rows
  kTangentEuclidean,     // Euclidean align + uniform on l2-normalized log0 rows
  kHyperbolicAlignOnly,  // hyperbolic alignment only
  kHyperbolicNaive,      // hyperbolic alignment + log E exp(-t D_c)
  kHyperGcl,             // hyperbolic alignment + tangent isotropy
};

LossVariant parse_variant(std::string_view name);
std::string_view to_string(LossVariant v);

namespace losses {

using ad::Var;

/// Mean hyperbolic distance between paired rows.
Var alignment_hyperbolic(Var z, Var z_prime, const Curvature& c);

/// KL of both views' tangent moments against the target (the standard normal by default).
Var isotropy_tangent(Var z, Var z_prime, const Curvature& c, const TangentTarget& target,
                     double jitter = kCovarianceJitter);
Var isotropy_tangent(Var z, Var z_prime, const Curvature& c);

/// log of the mean of exp(-t D_c) over ordered pairs i != j.
Var uniformity_hyperbolic_naive(Var z, double t, const Curvature& c);

struct EuclideanTerms {
  Var align;
  Var uniform;
};

/// Alignment and uniformity on l2-normalized rows; zero rows stay zero.
EuclideanTerms euclidean_align_uniform(Var z, Var z_prime, double t);

struct LossTerms {
  Var total;
  Var align;
  Var regularizer;  // unweighted uniformity/isotropy term; 0 for align-only
};

LossTerms total_loss(Var z, Var z_prime, const LossWeights& w, const Curvature& c,
                     LossVariant variant, const TangentTarget& target);
LossTerms total_loss(Var z, Var z_prime, const LossWeights& w, const Curvature& c,
                     LossVariant variant);

}  // namespace losses

}  // namespace hypergcl
