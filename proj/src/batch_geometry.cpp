#include "hypergcl/batch_geometry.hpp"

#include <cmath>
#include <limits>

namespace hypergcl::batch {

namespace {

Var sq_row_norm(Var a) { return ad::row_sum(a * a); }

// Squared Mobius gaps at or below this count as coincident points: distance 0, gradient 0.
constexpr double kCoincident = 1e-30;

ad::Matrix separated(const ad::Matrix& sq) {
  return (sq.array() > kCoincident).cast<double>().matrix();
}

}  // namespace

Var mobius_add(Var u, Var v, const Curvature& c) {
  if (u.rows() != v.rows() || u.cols() != v.cols()) {
    throw std::invalid_argument("mobius_add: batch shape mismatch");
  }
  const double k = c.value();
  Var uv = ad::row_sum(u * v);
  Var u2 = sq_row_norm(u);
  Var v2 = sq_row_norm(v);
  Var coef_u = 1.0 + 2.0 * k * uv + k * v2;
  Var coef_v = 1.0 - k * u2;
  Var den = 1.0 + 2.0 * k * uv + (k * k) * (u2 * v2);
  return (coef_u * u + coef_v * v) / den;
}

Var conformal_factor(Var x, const Curvature& c) {
  return 2.0 / (1.0 - c.value() * sq_row_norm(x));
}

Var exp0(Var v, const Curvature& c) {
  const double sc = c.sqrt();
  return ad::tanh_ratio(sc * ad::row_norm(v)) * v;
}

Var log0(Var z, const Curvature& c) {
  const double sc = c.sqrt();
  Var x = ad::clamp(sc * ad::row_norm(z), -1.0, 1.0 - kArtanhClamp);
  return ad::artanh_ratio(x) * z;
}

Var distance(Var p, Var q, const Curvature& c) {
  const double sc = c.sqrt();
  Var sq = sq_row_norm(mobius_add(-p, q, c));
  Var safe = ad::clamp(sq, kCoincident, std::numeric_limits<double>::infinity());
  Var x = ad::clamp(sc * ad::sqrt(safe), -1.0, 1.0 - kArtanhClamp);
  return ((2.0 / sc) * ad::artanh(x)) * p.tape().constant(separated(sq.value()));
}

Var pairwise_distance(Var z, const Curvature& c) {
  // For u = -z_i, v = z_j: |u (+) v|^2 = (a^2 |u|^2 + 2ab <u,v> + b^2 |v|^2) / den^2
  // with a = 1 + 2c<u,v> + c|v|^2, b = 1 - c|u|^2.
  const double k = c.value();
  const Eigen::Index n = z.rows();
  ad::Tape& t = z.tape();
  Var sq = sq_row_norm(z);                        // N x 1
  Var sq_row = ad::transpose(sq);                 // 1 x N
  Var uv = -1.0 * ad::matmul(z, ad::transpose(z));  // <-z_i, z_j>
  Var a = 1.0 + 2.0 * k * uv + k * sq_row;
  Var b = 1.0 - k * sq;
  Var den = 1.0 + 2.0 * k * uv + (k * k) * (sq * sq_row);
  Var num = a * a * sq + 2.0 * (a * b) * uv + b * b * sq_row;
  // The diagonal is 0 analytically; shift it to 1 so sqrt stays differentiable, then mask.
  const ad::Matrix eye = ad::Matrix::Identity(n, n);
  Var sq_gap = num / (den * den);
  Var safe = ad::clamp(sq_gap, kCoincident, std::numeric_limits<double>::infinity()) +
             t.constant(eye);
  const double sc = c.sqrt();
  Var x = ad::clamp(sc * ad::sqrt(safe), -1.0, 1.0 - kArtanhClamp);
  ad::Matrix keep = separated(sq_gap.value());
  keep.diagonal().setZero();
  return ((2.0 / sc) * ad::artanh(x)) * t.constant(keep);
}

Var project(Var z, const Curvature& c, double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("projection margin eps must lie in (0, 1)");
  }
  return ad::project_rows(z, (1.0 - eps) / c.sqrt());
}

}  // namespace hypergcl::batch
