#pragma once

#include <Eigen/Core>

#include "hypergcl/autodiff.hpp"
#include "hypergcl/geometry.hpp"

namespace hypergcl {

inline constexpr double kCovarianceJitter = 1e-6;

/// Tangent-space mean and 1/N covariance of a batch of ball points.
struct CovarianceSummary {
  Eigen::VectorXd mu;
  Eigen::MatrixXd sigma;
};

/// Singular values sorted nonincreasing.
class SingularSpectrum {
 public:
  explicit SingularSpectrum(Eigen::VectorXd values);
  static SingularSpectrum of(const Eigen::MatrixXd& m);
  /// Eigenvalues of a symmetric PSD matrix; tiny negative rounding is clipped to 0.
  static SingularSpectrum of_covariance(const Eigen::MatrixXd& sigma);

  const Eigen::VectorXd& values() const { return values_; }

 private:
  Eigen::VectorXd values_;
};

/// Target Gaussian on the tangent plane at the origin: N(mean, diag(variances)).
struct TangentTarget {
  Eigen::VectorXd mean;
  Eigen::VectorXd variances;

  static TangentTarget standard(Eigen::Index dim);
  /// N(m * 1, I_p): a fraction p of the diagonal, chosen by seed, set to 0.01.
  static TangentTarget shifted_degraded(Eigen::Index dim, double mean_shift, double fraction,
                                        unsigned long long seed);
  bool is_standard() const;
};

/// Rows of z are points of the ball. Requires at least 2 rows.
CovarianceSummary tangent_moments(const Eigen::MatrixXd& z, const Curvature& c);

double effective_rank(const SingularSpectrum& s);
double effective_rank(const Eigen::MatrixXd& m);
/// Erank from the eigenvalues of a covariance matrix.
double covariance_effective_rank(const Eigen::MatrixXd& sigma);

/// tr(S) - logdet(S) - d + |mu|^2 with S = sigma + jitter * I.
double gaussian_kl(const CovarianceSummary& s, double jitter = kCovarianceJitter);
/// Same divergence measured against a general diagonal target.
double gaussian_kl(const CovarianceSummary& s, const TangentTarget& target,
                   double jitter = kCovarianceJitter);

struct ErankBound {
  double lhs;  // -D(sigma, mu)
  double rhs;  // log Erank(sigma) + constant
  double constant;
  bool holds;
};

/// Lower bound of log Erank(sigma) by -D(sigma, mu). The constant is -log d,
/// which makes the bound tight at sigma = I, mu = 0.
ErankBound erank_bound_check(const CovarianceSummary& s);

struct Distortion {
  double max_abs_err;
  double mean_abs_err;
};

/// |d_tree(i, j) - d_ball(i, j)| over all unordered pairs.
Distortion tree_distortion(const Eigen::MatrixXd& tree_dists, const Eigen::MatrixXd& points,
                           const Curvature& c);

namespace spectral_ops {

struct TapeMoments {
  ad::Var mu;     // 1 x d
  ad::Var sigma;  // d x d
};

TapeMoments tangent_moments(ad::Var z, const Curvature& c);
/// Differentiable gaussian_kl against a target. Result is 1 x 1.
ad::Var gaussian_kl(const TapeMoments& m, const TangentTarget& target,
                    double jitter = kCovarianceJitter);

}  // namespace spectral_ops

}  // namespace hypergcl
