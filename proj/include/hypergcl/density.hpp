#pragma once

#include <cstdint>
#include <ostream>
#include <vector>

#include <Eigen/Core>

#include "hypergcl/geometry.hpp"

namespace hypergcl {

/// A tangent-plane Gaussian N(mu, sigma) at the origin, pushed into the ball by exp0.
class AmbientDensitySpec {
 public:
  AmbientDensitySpec(Eigen::VectorXd mu, Eigen::MatrixXd sigma, Curvature c);
  static AmbientDensitySpec isotropic(Eigen::Index dim, double stddev, Curvature c);

  const Eigen::VectorXd& mu() const { return mu_; }
  const Eigen::MatrixXd& sigma() const { return sigma_; }
  const Eigen::MatrixXd& cholesky() const { return chol_; }
  const Curvature& curvature() const { return c_; }
  Eigen::Index dim() const { return mu_.size(); }
  /// Returns sigma^2 when sigma = sigma^2 I, otherwise throws.
  double isotropic_variance() const;

  /// Tangent-plane Gaussian density at y.
  double normal_pdf(const Eigen::VectorXd& y) const;

 private:
  Eigen::VectorXd mu_;
  Eigen::MatrixXd sigma_;
  Eigen::MatrixXd chol_;
  double log_norm_;
  Curvature c_;
};

/// g(z) = artanh(sqrt(c)|z|) / (sqrt(c)|z|), with g(0) = 1.
double radial_stretch(const Eigen::VectorXd& z, const Curvature& c);

/// Jacobian determinant of log0 at z: 0.5 * lambda_z * g(z)^(d-1).
double log0_jacobian(const Eigen::VectorXd& z, const Curvature& c);

/// p_Z(z). Exactly 0 on or outside the boundary.
double ambient_density(const Eigen::VectorXd& z, const AmbientDensitySpec& spec);

/// n draws of exp0(N(mu, sigma)), kept inside the default projection margin.
Eigen::MatrixXd sample_ambient(std::size_t n, const AmbientDensitySpec& spec,
                               std::uint64_t seed);

inline constexpr std::size_t kDefaultResolution = 2048;

/// Midpoint quadrature of p_Z over the ball; d must be 1 or 2.
double integrate_density(const AmbientDensitySpec& spec,
                         std::size_t resolution = kDefaultResolution);

struct DensitySample {
  double radius;
  double density;
};

/// p_Z along a ray for isotropic sigma, radii uniform on [0, (1 - eps)/sqrt(c)].
std::vector<DensitySample> density_profile(const AmbientDensitySpec& spec, std::size_t n_radii,
                                           double eps = kDefaultEps);

/// Emits `radius,density` CSV.
void write_profile_csv(std::ostream& os, const std::vector<DensitySample>& profile);

/// P(|z| <= r) for isotropic sigma, by radial quadrature of p_Z.
double radial_cdf(const AmbientDensitySpec& spec, double r,
                  std::size_t resolution = kDefaultResolution);

/// One-sample Kolmogorov-Smirnov statistic of observed radii against radial_cdf.
double ks_statistic_radii(std::vector<double> radii, const AmbientDensitySpec& spec,
                          std::size_t resolution = 8192);

}  // namespace hypergcl
