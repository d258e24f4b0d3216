#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace hypergcl {

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

inline constexpr double kDefaultEps = 1e-5;
// artanh arguments are clamped to [0, 1 - kArtanhClamp].
inline constexpr double kArtanhClamp = 1e-12;

/// Positive curvature parameter c of the Poincare ball; the ball radius is 1/sqrt(c).
template <typename Scalar>
class BasicCurvature {
 public:
  explicit BasicCurvature(Scalar c) : c_(c) {
    if (!(c > Scalar(0)) || !std::isfinite(static_cast<double>(c))) {
      throw std::invalid_argument("curvature must be a finite positive number");
    }
  }

  Scalar value() const { return c_; }
  Scalar sqrt() const { return std::sqrt(c_); }
  Scalar radius() const { return Scalar(1) / std::sqrt(c_); }

  friend bool operator==(const BasicCurvature& a, const BasicCurvature& b) { return a.c_ == b.c_; }

 private:
  Scalar c_;
};

using Curvature = BasicCurvature<double>;

namespace poincare {

// Unchecked kernels over plain Eigen vectors. The checked API below validates
// domain membership and forwards here.

template <typename Scalar>
Scalar artanh_clamped(Scalar x) {
  const Scalar hi = Scalar(1) - Scalar(kArtanhClamp);
  if (x < Scalar(0)) x = Scalar(0);
  if (x > hi) x = hi;
  return std::atanh(x);
}

/// artanh(x)/x with the removable singularity at 0 evaluated by series.
template <typename Scalar>
Scalar artanh_ratio(Scalar x) {
  if (std::abs(x) < Scalar(1e-4)) {
    const Scalar x2 = x * x;
    return Scalar(1) + x2 / Scalar(3) + x2 * x2 / Scalar(5);
  }
  return std::atanh(x) / x;
}

/// tanh(x)/x with the removable singularity at 0 evaluated by series.
template <typename Scalar>
Scalar tanh_ratio(Scalar x) {
  if (std::abs(x) < Scalar(1e-4)) {
    const Scalar x2 = x * x;
    return Scalar(1) - x2 / Scalar(3) + Scalar(2) * x2 * x2 / Scalar(15);
  }
  return std::tanh(x) / x;
}

template <typename DerivedU, typename DerivedV>
Vector<typename DerivedU::Scalar> mobius_add(const Eigen::MatrixBase<DerivedU>& u,
                                             const Eigen::MatrixBase<DerivedV>& v,
                                             typename DerivedU::Scalar c) {
  using Scalar = typename DerivedU::Scalar;
  const Scalar uv = u.dot(v);
  const Scalar u2 = u.squaredNorm();
  const Scalar v2 = v.squaredNorm();
  const Scalar den = Scalar(1) + Scalar(2) * c * uv + c * c * u2 * v2;
  return ((Scalar(1) + Scalar(2) * c * uv + c * v2) * u + (Scalar(1) - c * u2) * v) / den;
}

template <typename Derived>
typename Derived::Scalar conformal_factor(const Eigen::MatrixBase<Derived>& x,
                                          typename Derived::Scalar c) {
  using Scalar = typename Derived::Scalar;
  return Scalar(2) / (Scalar(1) - c * x.squaredNorm());
}

template <typename Derived>
Vector<typename Derived::Scalar> exp0(const Eigen::MatrixBase<Derived>& v,
                                      typename Derived::Scalar c) {
  const auto sc = std::sqrt(c);
  return tanh_ratio(sc * v.norm()) * v;
}

template <typename Derived>
Vector<typename Derived::Scalar> log0(const Eigen::MatrixBase<Derived>& z,
                                      typename Derived::Scalar c) {
  using Scalar = typename Derived::Scalar;
  const Scalar sc = std::sqrt(c);
  Scalar x = sc * z.norm();
  const Scalar hi = Scalar(1) - Scalar(kArtanhClamp);
  if (x > hi) x = hi;
  return artanh_ratio(x) * z;
}

template <typename DerivedX, typename DerivedV>
Vector<typename DerivedX::Scalar> exp_map(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedV>& v,
                                          typename DerivedX::Scalar c) {
  using Scalar = typename DerivedX::Scalar;
  const Scalar vn = v.norm();
  if (vn == Scalar(0)) return x;
  const Scalar sc = std::sqrt(c);
  const Scalar lam = conformal_factor(x, c);
  const Vector<Scalar> step = std::tanh(sc * lam * vn / Scalar(2)) * v / (sc * vn);
  return mobius_add(x, step, c);
}

template <typename DerivedX, typename DerivedY>
Vector<typename DerivedX::Scalar> log_map(const Eigen::MatrixBase<DerivedX>& x,
                                          const Eigen::MatrixBase<DerivedY>& y,
                                          typename DerivedX::Scalar c) {
  using Scalar = typename DerivedX::Scalar;
  const Vector<Scalar> w = mobius_add(-x, y, c);
  const Scalar wn = w.norm();
  if (wn == Scalar(0)) return Vector<Scalar>::Zero(x.size());
  const Scalar sc = std::sqrt(c);
  const Scalar lam = conformal_factor(x, c);
  return Scalar(2) / (sc * lam) * artanh_clamped(sc * wn) * w / wn;
}

template <typename DerivedP, typename DerivedQ>
typename DerivedP::Scalar distance(const Eigen::MatrixBase<DerivedP>& p,
                                   const Eigen::MatrixBase<DerivedQ>& q,
                                   typename DerivedP::Scalar c) {
  using Scalar = typename DerivedP::Scalar;
  const Scalar sc = std::sqrt(c);
  return Scalar(2) / sc * artanh_clamped(sc * mobius_add(-p, q, c).norm());
}

template <typename Derived>
Vector<typename Derived::Scalar> project(const Eigen::MatrixBase<Derived>& z,
                                         typename Derived::Scalar c,
                                         typename Derived::Scalar eps) {
  using Scalar = typename Derived::Scalar;
  const Scalar max_norm = (Scalar(1) - eps) / std::sqrt(c);
  const Scalar n = z.norm();
  if (n <= max_norm) return z;
  return max_norm / n * z;
}

}  // namespace poincare

/// A point strictly inside the Poincare ball of curvature c.
template <typename Scalar>
class BasicPoincarePoint {
 public:
  BasicPoincarePoint(Vector<Scalar> coords, BasicCurvature<Scalar> c)
      : coords_(std::move(coords)), c_(c) {
    if (!coords_.allFinite()) {
      throw std::invalid_argument("point coordinates must be finite");
    }
    if (!(c_.value() * coords_.squaredNorm() < Scalar(1))) {
      throw std::domain_error("point lies on or outside the Poincare ball boundary");
    }
  }

  static BasicPoincarePoint origin(Eigen::Index dim, BasicCurvature<Scalar> c) {
    return BasicPoincarePoint(Vector<Scalar>::Zero(dim), c);
  }

  const Vector<Scalar>& coords() const { return coords_; }
  const BasicCurvature<Scalar>& curvature() const { return c_; }
  Eigen::Index dim() const { return coords_.size(); }

  BasicPoincarePoint operator-() const { return BasicPoincarePoint(-coords_, c_); }

 private:
  Vector<Scalar> coords_;
  BasicCurvature<Scalar> c_;
};

/// A tangent vector at a base point; magnitude is unconstrained.
template <typename Scalar>
class BasicTangentVector {
 public:
  BasicTangentVector(Vector<Scalar> coords, BasicPoincarePoint<Scalar> base)
      : coords_(std::move(coords)), base_(std::move(base)) {
    if (coords_.size() != base_.dim()) {
      throw std::invalid_argument("tangent vector dimension does not match its base point");
    }
  }

  const Vector<Scalar>& coords() const { return coords_; }
  const BasicPoincarePoint<Scalar>& base() const { return base_; }

 private:
  Vector<Scalar> coords_;
  BasicPoincarePoint<Scalar> base_;
};

using PoincarePoint = BasicPoincarePoint<double>;
using TangentVector = BasicTangentVector<double>;

namespace detail {

template <typename Scalar>
void require_compatible(const BasicPoincarePoint<Scalar>& a, const BasicPoincarePoint<Scalar>& b,
                        const BasicCurvature<Scalar>& c) {
  if (a.dim() != b.dim()) throw std::invalid_argument("dimension mismatch");
  if (!(a.curvature() == c) || !(b.curvature() == c)) {
    throw std::invalid_argument("curvature mismatch");
  }
}

template <typename Scalar>
void require_curvature(const BasicPoincarePoint<Scalar>& a, const BasicCurvature<Scalar>& c) {
  if (!(a.curvature() == c)) throw std::invalid_argument("curvature mismatch");
}

// Rounding can push a result onto the boundary; pull it back inside the eps margin.
template <typename Scalar>
BasicPoincarePoint<Scalar> inside(Vector<Scalar> v, const BasicCurvature<Scalar>& c) {
  if (!(c.value() * v.squaredNorm() < Scalar(1) - Scalar(2) * Scalar(kDefaultEps))) {
    v = poincare::project(v, c.value(), Scalar(kDefaultEps));
  }
  return BasicPoincarePoint<Scalar>(std::move(v), c);
}

}  // namespace detail

template <typename Scalar>
BasicPoincarePoint<Scalar> mobius_add(const BasicPoincarePoint<Scalar>& u,
                                      const BasicPoincarePoint<Scalar>& v,
                                      const BasicCurvature<Scalar>& c) {
  detail::require_compatible(u, v, c);
  return detail::inside<Scalar>(poincare::mobius_add(u.coords(), v.coords(), c.value()), c);
}

template <typename Scalar>
Scalar conformal_factor(const BasicPoincarePoint<Scalar>& x, const BasicCurvature<Scalar>& c) {
  detail::require_curvature(x, c);
  return poincare::conformal_factor(x.coords(), c.value());
}

template <typename Scalar>
BasicPoincarePoint<Scalar> exp_map(const BasicPoincarePoint<Scalar>& x,
                                   const BasicTangentVector<Scalar>& v,
                                   const BasicCurvature<Scalar>& c) {
  detail::require_curvature(x, c);
  if (v.coords().size() != x.dim()) throw std::invalid_argument("dimension mismatch");
  if (v.coords().norm() == Scalar(0)) return x;
  return detail::inside<Scalar>(poincare::exp_map(x.coords(), v.coords(), c.value()), c);
}

template <typename Scalar>
BasicTangentVector<Scalar> log_map(const BasicPoincarePoint<Scalar>& x,
                                   const BasicPoincarePoint<Scalar>& y,
                                   const BasicCurvature<Scalar>& c) {
  detail::require_compatible(x, y, c);
  return BasicTangentVector<Scalar>(poincare::log_map(x.coords(), y.coords(), c.value()), x);
}

template <typename Scalar>
Scalar distance(const BasicPoincarePoint<Scalar>& p, const BasicPoincarePoint<Scalar>& q,
                const BasicCurvature<Scalar>& c) {
  detail::require_compatible(p, q, c);
  if (p.coords() == q.coords()) return Scalar(0);
  return poincare::distance(p.coords(), q.coords(), c.value());
}

/// Rescales z onto the ball of radius (1 - eps)/sqrt(c) when it lies outside it.
template <typename Derived>
BasicPoincarePoint<typename Derived::Scalar> project_to_ball(
    const Eigen::MatrixBase<Derived>& z, const BasicCurvature<typename Derived::Scalar>& c,
    typename Derived::Scalar eps = typename Derived::Scalar(kDefaultEps)) {
  using Scalar = typename Derived::Scalar;
  if (!(eps > Scalar(0) && eps < Scalar(1))) {
    throw std::invalid_argument("projection margin eps must lie in (0, 1)");
  }
  if (!z.allFinite()) throw std::invalid_argument("cannot project a non-finite vector");
  return BasicPoincarePoint<Scalar>(poincare::project(z, c.value(), eps), c);
}

}  // namespace hypergcl
