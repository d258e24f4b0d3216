#include "hypergcl/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include <Eigen/Cholesky>

#include "hypergcl/batch_geometry.hpp"
#include "hypergcl/linalg.hpp"

namespace hypergcl {

SingularSpectrum::SingularSpectrum(Eigen::VectorXd values) : values_(std::move(values)) {
  for (Eigen::Index i = 0; i < values_.size(); ++i) {
    if (!(values_(i) >= 0.0)) throw std::invalid_argument("singular values must be nonnegative");
    if (i > 0 && values_(i) > values_(i - 1)) {
      throw std::invalid_argument("singular values must be sorted nonincreasing");
    }
  }
}

SingularSpectrum SingularSpectrum::of(const Eigen::MatrixXd& m) {
  return SingularSpectrum(linalg::jacobi_singular_values(m));
}

SingularSpectrum SingularSpectrum::of_covariance(const Eigen::MatrixXd& sigma) {
  Eigen::VectorXd ev = linalg::jacobi_eigen(sigma).values;
  return SingularSpectrum(ev.cwiseMax(0.0));
}

TangentTarget TangentTarget::standard(Eigen::Index dim) {
  return {Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Ones(dim)};
}

TangentTarget TangentTarget::shifted_degraded(Eigen::Index dim, double mean_shift,
                                              double fraction, unsigned long long seed) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) {
    throw std::invalid_argument("degraded fraction must lie in [0, 1]");
  }
  TangentTarget t{Eigen::VectorXd::Constant(dim, mean_shift), Eigen::VectorXd::Ones(dim)};
  const auto k = static_cast<Eigen::Index>(std::llround(fraction * static_cast<double>(dim)));
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(dim));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(idx.begin(), idx.end(), rng);
  for (Eigen::Index i = 0; i < k; ++i) t.variances(idx[static_cast<std::size_t>(i)]) = 0.01;
  return t;
}

bool TangentTarget::is_standard() const {
  return mean.isZero(0.0) && (variances.array() == 1.0).all();
}

CovarianceSummary tangent_moments(const Eigen::MatrixXd& z, const Curvature& c) {
  if (z.rows() < 2) throw std::invalid_argument("tangent_moments needs at least 2 points");
  Eigen::MatrixXd y(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    if (!(c.value() * z.row(i).squaredNorm() < 1.0)) {
      throw std::domain_error("tangent_moments: point outside the ball");
    }
    y.row(i) = poincare::log0(Eigen::VectorXd(z.row(i).transpose()), c.value()).transpose();
  }
  CovarianceSummary s;
  s.mu = y.colwise().mean().transpose();
  const Eigen::MatrixXd centered = y.rowwise() - s.mu.transpose();
  s.sigma = centered.transpose() * centered / static_cast<double>(z.rows());
  s.sigma = (0.5 * (s.sigma + s.sigma.transpose())).eval();
  return s;
}

double effective_rank(const SingularSpectrum& s) {
  const double total = s.values().sum();
  if (!(total > 0.0)) throw std::invalid_argument("effective rank of an all-zero matrix");
  double h = 0.0;
  for (Eigen::Index i = 0; i < s.values().size(); ++i) {
    const double p = s.values()(i) / total;
    if (p > 0.0) h -= p * std::log(p);
  }
  return std::exp(h);
}

double effective_rank(const Eigen::MatrixXd& m) { return effective_rank(SingularSpectrum::of(m)); }

double covariance_effective_rank(const Eigen::MatrixXd& sigma) {
  return effective_rank(SingularSpectrum::of_covariance(sigma));
}

double gaussian_kl(const CovarianceSummary& s, double jitter) {
  return gaussian_kl(s, TangentTarget::standard(s.mu.size()), jitter);
}

double gaussian_kl(const CovarianceSummary& s, const TangentTarget& target, double jitter) {
  const Eigen::Index d = s.mu.size();
  if (s.sigma.rows() != d || s.sigma.cols() != d || target.mean.size() != d ||
      target.variances.size() != d) {
    throw std::invalid_argument("gaussian_kl: dimension mismatch");
  }
  const Eigen::MatrixXd sj = s.sigma + jitter * Eigen::MatrixXd::Identity(d, d);
  const Eigen::LLT<Eigen::MatrixXd> llt(sj);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("gaussian_kl: covariance is singular beyond jitter tolerance");
  }
  double logdet = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) logdet += 2.0 * std::log(llt.matrixLLT()(i, i));
  const Eigen::VectorXd inv_var = target.variances.cwiseInverse();
  const Eigen::VectorXd diff = s.mu - target.mean;
  const double tr = sj.diagonal().dot(inv_var);
  const double maha = diff.cwiseProduct(diff).dot(inv_var);
  const double target_logdet = target.variances.array().log().sum();
  return tr + maha - static_cast<double>(d) + target_logdet - logdet;
}

ErankBound erank_bound_check(const CovarianceSummary& s) {
  const auto d = static_cast<double>(s.mu.size());
  const SingularSpectrum eig = SingularSpectrum::of_covariance(s.sigma);
  if (!(eig.values().minCoeff() > 0.0)) {
    throw std::domain_error("erank_bound_check: covariance is singular");
  }
  double kl = 0.0;
  for (Eigen::Index i = 0; i < eig.values().size(); ++i) {
    const double l = eig.values()(i);
    kl += l - std::log(l) - 1.0;
  }
  kl += s.mu.squaredNorm();
  ErankBound b;
  b.constant = -std::log(d);
  b.lhs = -kl;
  b.rhs = std::log(effective_rank(eig)) + b.constant;
  b.holds = b.lhs <= b.rhs + 1e-12;
  return b;
}

Distortion tree_distortion(const Eigen::MatrixXd& tree_dists, const Eigen::MatrixXd& points,
                           const Curvature& c) {
  const Eigen::Index n = points.rows();
  if (tree_dists.rows() != n || tree_dists.cols() != n) {
    throw std::invalid_argument("tree_distortion: dimension mismatch");
  }
  const double scale = std::max(1.0, tree_dists.cwiseAbs().maxCoeff());
  if ((tree_dists - tree_dists.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw std::invalid_argument("tree_distortion: tree distances are not symmetric");
  }
  if (tree_dists.diagonal().cwiseAbs().maxCoeff() > 0.0) {
    throw std::invalid_argument("tree_distortion: tree distances need a zero diagonal");
  }
  Distortion out{0.0, 0.0};
  std::size_t pairs = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const PoincarePoint p(points.row(i).transpose(), c);
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const PoincarePoint q(points.row(j).transpose(), c);
      const double err = std::abs(tree_dists(i, j) - distance(p, q, c));
      out.max_abs_err = std::max(out.max_abs_err, err);
      out.mean_abs_err += err;
      ++pairs;
    }
  }
  if (pairs > 0) out.mean_abs_err /= static_cast<double>(pairs);
  return out;
}

namespace spectral_ops {

TapeMoments tangent_moments(ad::Var z, const Curvature& c) {
  if (z.rows() < 2) throw std::invalid_argument("tangent_moments needs at least 2 points");
  if (((z.value().rowwise().squaredNorm() * c.value()).array() >= 1.0).any()) {
    throw std::domain_error("tangent_moments: point outside the ball");
  }
  ad::Var y = batch::log0(z, c);
  ad::Var mu = ad::col_mean(y);
  ad::Var centered = y - mu;
  ad::Var sigma = ad::matmul(ad::transpose(centered), centered) / static_cast<double>(z.rows());
  return {mu, sigma};
}

ad::Var gaussian_kl(const TapeMoments& m, const TangentTarget& target, double jitter) {
  ad::Tape& t = m.mu.tape();
  const Eigen::Index d = m.mu.cols();
  if (target.mean.size() != d || target.variances.size() != d) {
    throw std::invalid_argument("gaussian_kl: target dimension mismatch");
  }
  ad::Var sj = m.sigma + t.constant(jitter * ad::Matrix::Identity(d, d));
  ad::Var kl;
  if (target.is_standard()) {
    kl = ad::trace(sj) - ad::logdet(sj) + ad::sum(ad::square(m.mu)) - static_cast<double>(d);
  } else {
    const ad::Matrix inv_var = target.variances.cwiseInverse().transpose();
    ad::Var w = t.constant(inv_var);  // 1 x d
    ad::Var diff = m.mu - t.constant(ad::Matrix(target.mean.transpose()));
    ad::Var tr = ad::sum(w * ad::transpose(ad::row_sum(sj * t.constant(ad::Matrix::Identity(d, d)))));
    ad::Var maha = ad::sum(w * ad::square(diff));
    kl = tr + maha - ad::logdet(sj) +
         (target.variances.array().log().sum() - static_cast<double>(d));
  }
  return kl;
}

}  // namespace spectral_ops

}  // namespace hypergcl
