#include "hypergcl/density.hpp"

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include <Eigen/Cholesky>

namespace hypergcl {

AmbientDensitySpec::AmbientDensitySpec(Eigen::VectorXd mu, Eigen::MatrixXd sigma, Curvature c)
    : mu_(std::move(mu)), sigma_(std::move(sigma)), c_(c) {
  const Eigen::Index d = mu_.size();
  if (d < 1) throw std::invalid_argument("density spec needs dimension >= 1");
  if (sigma_.rows() != d || sigma_.cols() != d) {
    throw std::invalid_argument("density spec: sigma shape does not match mu");
  }
  if ((sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * sigma_.cwiseAbs().maxCoeff()) {
    throw std::invalid_argument("density spec: sigma is not symmetric");
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(sigma_);
  if (llt.info() != Eigen::Success) {
    throw std::invalid_argument("density spec: sigma is not positive definite");
  }
  chol_ = llt.matrixL();
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(chol_(i, i));
  log_norm_ = -0.5 * (static_cast<double>(d) * std::log(2.0 * std::numbers::pi) + logdet);
}

AmbientDensitySpec AmbientDensitySpec::isotropic(Eigen::Index dim, double stddev, Curvature c) {
  if (!(stddev > 0.0)) throw std::invalid_argument("standard deviation must be positive");
  return AmbientDensitySpec(Eigen::VectorXd::Zero(dim),
                            stddev * stddev * Eigen::MatrixXd::Identity(dim, dim), c);
}

double AmbientDensitySpec::isotropic_variance() const {
  const double v = sigma_(0, 0);
  const Eigen::MatrixXd iso = v * Eigen::MatrixXd::Identity(dim(), dim());
  if ((sigma_ - iso).cwiseAbs().maxCoeff() > 1e-12 * v) {
    throw std::invalid_argument("density profile requires an isotropic covariance");
  }
  return v;
}

double AmbientDensitySpec::normal_pdf(const Eigen::VectorXd& y) const {
  const Eigen::VectorXd w = chol_.triangularView<Eigen::Lower>().solve(y - mu_);
  return std::exp(log_norm_ - 0.5 * w.squaredNorm());
}

double radial_stretch(const Eigen::VectorXd& z, const Curvature& c) {
  return poincare::artanh_ratio(c.sqrt() * z.norm());
}

double log0_jacobian(const Eigen::VectorXd& z, const Curvature& c) {
  const double lam = 2.0 / (1.0 - c.value() * z.squaredNorm());
  return 0.5 * lam * std::pow(radial_stretch(z, c), static_cast<double>(z.size() - 1));
}

double ambient_density(const Eigen::VectorXd& z, const AmbientDensitySpec& spec) {
  if (z.size() != spec.dim()) throw std::invalid_argument("ambient_density: dimension mismatch");
  const Curvature& c = spec.curvature();
  // Outside the support the transformed density is complex-valued; it is reported as 0.
  // Within the artanh clamp of the boundary the true value underflows to 0 as well.
  if (!(c.sqrt() * z.norm() < 1.0 - kArtanhClamp)) return 0.0;
  const Eigen::VectorXd y = poincare::log0(z, c.value());
  return spec.normal_pdf(y) * log0_jacobian(z, c);
}

Eigen::MatrixXd sample_ambient(std::size_t n, const AmbientDensitySpec& spec,
                               std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_ambient needs n >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const Eigen::Index d = spec.dim();
  const double c = spec.curvature().value();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n), d);
  Eigen::VectorXd eps(d);
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index k = 0; k < d; ++k) eps(k) = normal(rng);
    const Eigen::VectorXd y = spec.mu() + spec.cholesky() * eps;
    out.row(i) = poincare::project(poincare::exp0(y, c), c, kDefaultEps).transpose();
  }
  return out;
}

double integrate_density(const AmbientDensitySpec& spec, std::size_t resolution) {
  const Eigen::Index d = spec.dim();
  if (d != 1 && d != 2) throw std::invalid_argument("integrate_density supports d in {1, 2}");
  if (resolution < 256) throw std::invalid_argument("integrate_density needs resolution >= 256");
  const double radius = spec.curvature().radius();
  const auto n = static_cast<double>(resolution);
  double total = 0.0;
  if (d == 1) {
    const double h = 2.0 * radius / n;
    Eigen::VectorXd z(1);
    for (std::size_t i = 0; i < resolution; ++i) {
      z(0) = -radius + (static_cast<double>(i) + 0.5) * h;
      total += ambient_density(z, spec);
    }
    return total * h;
  }
  const double hr = radius / n;
  const double ht = 2.0 * std::numbers::pi / n;
  Eigen::VectorXd z(2);
  for (std::size_t i = 0; i < resolution; ++i) {
    const double r = (static_cast<double>(i) + 0.5) * hr;
    double ring = 0.0;
    for (std::size_t j = 0; j < resolution; ++j) {
      const double th = (static_cast<double>(j) + 0.5) * ht;
      z(0) = r * std::cos(th);
      z(1) = r * std::sin(th);
      ring += ambient_density(z, spec);
    }
    total += ring * r;
  }
  return total * hr * ht;
}

std::vector<DensitySample> density_profile(const AmbientDensitySpec& spec, std::size_t n_radii,
                                           double eps) {
  spec.isotropic_variance();
  if (!spec.mu().isZero(0.0)) {
    throw std::invalid_argument("density profile requires a zero-mean Gaussian");
  }
  if (n_radii < 2) throw std::invalid_argument("density profile needs at least 2 radii");
  const double r_max = (1.0 - eps) * spec.curvature().radius();
  std::vector<DensitySample> out;
  out.reserve(n_radii);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(spec.dim());
  for (std::size_t i = 0; i < n_radii; ++i) {
    const double r = r_max * static_cast<double>(i) / static_cast<double>(n_radii - 1);
    z(0) = r;
    out.push_back({r, ambient_density(z, spec)});
  }
  return out;
}

void write_profile_csv(std::ostream& os, const std::vector<DensitySample>& profile) {
  char buf[96];
  os << "radius,density\n";
  for (const auto& s : profile) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", s.radius, s.density);
    os << buf;
  }
}

namespace {

// Surface measure of the sphere of radius r in d dimensions (2 points for d = 1).
double shell_measure(Eigen::Index d, double r) {
  const double dd = static_cast<double>(d);
  return 2.0 * std::pow(std::numbers::pi, dd / 2.0) / std::tgamma(dd / 2.0) * std::pow(r, dd - 1.0);
}

// Cumulative radial mass at the grid edges k * R / n.
std::vector<double> radial_cdf_table(const AmbientDensitySpec& spec, std::size_t n) {
  spec.isotropic_variance();
  if (!spec.mu().isZero(0.0)) throw std::invalid_argument("radial CDF requires zero mean");
  const double radius = spec.curvature().radius();
  const double h = radius / static_cast<double>(n);
  std::vector<double> cdf(n + 1, 0.0);
  Eigen::VectorXd z = Eigen::VectorXd::Zero(spec.dim());
  for (std::size_t i = 0; i < n; ++i) {
    const double r = (static_cast<double>(i) + 0.5) * h;
    z(0) = r;
    cdf[i + 1] = cdf[i] + ambient_density(z, spec) * shell_measure(spec.dim(), r) * h;
  }
  return cdf;
}

double interpolate(const std::vector<double>& table, double radius, double r) {
  const double n = static_cast<double>(table.size() - 1);
  const double pos = std::clamp(r / radius * n, 0.0, n);
  const auto k = static_cast<std::size_t>(std::min(std::floor(pos), n - 1.0));
  const double frac = pos - static_cast<double>(k);
  return table[k] + frac * (table[k + 1] - table[k]);
}

}  // namespace

double radial_cdf(const AmbientDensitySpec& spec, double r, std::size_t resolution) {
  const auto table = radial_cdf_table(spec, resolution);
  return interpolate(table, spec.curvature().radius(), r);
}

double ks_statistic_radii(std::vector<double> radii, const AmbientDensitySpec& spec,
                          std::size_t resolution) {
  if (radii.empty()) throw std::invalid_argument("ks statistic of an empty sample");
  const auto table = radial_cdf_table(spec, resolution);
  std::sort(radii.begin(), radii.end());
  const double n = static_cast<double>(radii.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < radii.size(); ++i) {
    const double f = interpolate(table, spec.curvature().radius(), radii[i]);
    ks = std::max({ks, std::abs(f - static_cast<double>(i) / n),
                   std::abs(static_cast<double>(i + 1) / n - f)});
  }
  return ks;
}

}  // namespace hypergcl
