#include "hypergcl/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <numeric>
#include <random>
#include <stdexcept>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "hypergcl/batch_geometry.hpp"
#include "hypergcl/density.hpp"
#include "hypergcl/geometry.hpp"
#include "hypergcl/graph.hpp"
#include "hypergcl/linalg.hpp"
#include "hypergcl/losses.hpp"
#include "hypergcl/spectral.hpp"

namespace hypergcl::verify {

namespace {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using MobiusFn = std::function<Vec(const Vec&, const Vec&, double)>;
using Rng = std::mt19937_64;

MobiusFn mobius_for(Mutation m) {
  if (m == Mutation::kMobiusSign) {
    return [](const Vec& u, const Vec& v, double c) -> Vec {
      const double uv = u.dot(v), u2 = u.squaredNorm(), v2 = v.squaredNorm();
      const double den = 1.0 + 2.0 * c * uv + c * c * u2 * v2;
      return ((1.0 - 2.0 * c * uv + c * v2) * u + (1.0 - c * u2) * v) / den;
    };
  }
  return [](const Vec& u, const Vec& v, double c) -> Vec { return poincare::mobius_add(u, v, c); };
}

class Recorder {
 public:
  Recorder(std::string suite, std::vector<PropertyResult>& out) : suite_(std::move(suite)), out_(out) {}

  // fn returns the worst error; pass iff worst <= tol (and finite).
  void check(const std::string& name, double tol, int samples, const std::function<double()>& fn,
             const std::string& detail = "") {
    const auto t0 = std::chrono::steady_clock::now();
    PropertyResult r;
    r.suite = suite_;
    r.name = name;
    r.samples = samples;
    r.tolerance = tol;
    r.detail = detail;
    try {
      r.worst = fn();
      r.passed = std::isfinite(r.worst) && r.worst <= tol;
    } catch (const std::exception& e) {
      r.passed = false;
      r.worst = std::numeric_limits<double>::infinity();
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out_.push_back(std::move(r));
  }

 private:
  std::string suite_;
  std::vector<PropertyResult>& out_;
};

Vec gaussian_vec(Rng& rng, Eigen::Index d, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v(i) = n(rng);
  return v;
}

Mat gaussian_mat(Rng& rng, Eigen::Index r, Eigen::Index c, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m(i) = n(rng);
  return m;
}

double uniform(Rng& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

// Point with norm uniform in [0, max_frac] of the ball radius.
Vec ball_point(Rng& rng, Eigen::Index d, double c, double max_frac) {
  Vec v = gaussian_vec(rng, d);
  const double n = v.norm();
  if (n == 0.0) return v;
  return v / n * uniform(rng, 0.0, max_frac) / std::sqrt(c);
}

Mat ball_rows(Rng& rng, Eigen::Index n, Eigen::Index d, double c, double max_frac) {
  Mat m(n, d);
  for (Eigen::Index i = 0; i < n; ++i) m.row(i) = ball_point(rng, d, c, max_frac).transpose();
  return m;
}

double rel(double err, double scale) { return err / std::max(1.0, std::abs(scale)); }

void geometry_suite(const Options& o, std::vector<PropertyResult>& out) {
  Recorder rec("geometry", out);
  const MobiusFn mob = mobius_for(o.mutation);
  const int n = o.geometry_samples;
  constexpr double tol = 1e-9;

  rec.check("exp_log_roundtrip", tol, n, [&] {
    Rng rng(o.seed ^ 0x11);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = uniform(rng, 0.1, 2.0);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 8);
      const Vec x = ball_point(rng, d, c, 0.9);
      const double lam = poincare::conformal_factor(x, c);
      // Tangent vectors up to hyperbolic length 4 / sqrt(c).
      Vec v = gaussian_vec(rng, d);
      if (v.norm() > 0.0) v *= uniform(rng, 0.0, 4.0) / (std::sqrt(c) * lam * v.norm());
      const Vec y = poincare::exp_map(x, v, c);
      worst = std::max(worst, rel((poincare::log_map(x, y, c) - v).norm(), v.norm()));
      const Vec y2 = ball_point(rng, d, c, 0.9);
      worst = std::max(worst, (poincare::exp_map(x, poincare::log_map(x, y2, c), c) - y2).norm());
    }
    return worst;
  });

  rec.check("mobius_left_cancellation", tol, n, [&] {
    Rng rng(o.seed ^ 0x12);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = uniform(rng, 0.1, 2.0);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 8);
      const Vec a = ball_point(rng, d, c, 0.9);
      const Vec b = ball_point(rng, d, c, 0.9);
      worst = std::max(worst, (mob(-a, mob(a, b, c), c) - b).norm() * std::sqrt(c));
    }
    return worst;
  });

  rec.check("distance_metric_axioms", tol, n, [&] {
    Rng rng(o.seed ^ 0x13);
    auto dist = [&](const Vec& p, const Vec& q, double c) {
      if (p == q) return 0.0;
      return 2.0 / std::sqrt(c) * poincare::artanh_clamped(std::sqrt(c) * mob(-p, q, c).norm());
    };
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = uniform(rng, 0.1, 2.0);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 8);
      const Vec x = ball_point(rng, d, c, 0.9);
      const Vec y = ball_point(rng, d, c, 0.9);
      const Vec z = ball_point(rng, d, c, 0.9);
      const double dxy = dist(x, y, c), dyx = dist(y, x, c);
      const double dyz = dist(y, z, c), dxz = dist(x, z, c);
      worst = std::max(worst, std::abs(dist(x, x, c)));
      worst = std::max(worst, rel(std::abs(dxy - dyx), dxy));
      worst = std::max(worst, std::max(0.0, -dxy));
      if (x != y && !(dxy > 0.0)) worst = std::max(worst, 1.0);
      worst = std::max(worst, rel(std::max(0.0, dxz - dxy - dyz), dxz));
    }
    return worst;
  });

  rec.check("distance_equals_scaled_tangent_norm", tol, n, [&] {
    Rng rng(o.seed ^ 0x14);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = uniform(rng, 0.1, 2.0);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 8);
      const Vec x = ball_point(rng, d, c, 0.9);
      const double lam = poincare::conformal_factor(x, c);
      Vec v = gaussian_vec(rng, d);
      if (v.norm() > 0.0) v *= uniform(rng, 0.0, 4.0) / (std::sqrt(c) * lam * v.norm());
      const double expected = lam * v.norm();
      worst = std::max(worst, rel(std::abs(poincare::distance(x, poincare::exp_map(x, v, c), c) -
                                           expected),
                                  expected));
    }
    return worst;
  });

  rec.check("projection_margin_and_idempotence", tol, n, [&] {
    Rng rng(o.seed ^ 0x15);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const double c = uniform(rng, 0.1, 2.0);
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 8);
      const Vec z = gaussian_vec(rng, d, 3.0);
      const Curvature cv(c);
      const PoincarePoint p = project_to_ball(z, cv);
      const double max_norm = (1.0 - kDefaultEps) / std::sqrt(c);
      worst = std::max(worst, std::max(0.0, p.coords().norm() - max_norm));
      worst = std::max(worst, (project_to_ball(p.coords(), cv).coords() - p.coords()).norm());
      if (z.norm() <= max_norm) worst = std::max(worst, (p.coords() - z).norm());
    }
    return worst;
  });
}

using GradFn = std::function<ad::Var(ad::Tape&, ad::Var)>;

void autodiff_suite(const Options& o, std::vector<PropertyResult>& out) {
  Recorder rec("autodiff", out);
  constexpr double tol = 1e-5;
  const int k = o.gradient_configs;

  // Runs finite_diff_check on k random configurations built by make(rng).
  auto grad_check = [&](const std::string& name, std::uint64_t salt,
                        const std::function<std::pair<GradFn, Mat>(Rng&)>& make) {
    rec.check(name, tol, k, [&] {
      Rng rng(o.seed ^ salt);
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        auto [f, x] = make(rng);
        worst = std::max(worst, ad::finite_diff_check(f, x));
      }
      return worst;
    });
  };

  grad_check("elementwise_ops", 0x21, [](Rng& rng) {
    Mat x = gaussian_mat(rng, 4, 3, 0.5);
    GradFn f = [](ad::Tape&, ad::Var v) {
      ad::Var a = ad::tanh(v) * ad::exp(0.3 * v) + ad::square(v) / (2.0 + ad::sqrt(ad::square(v) + 1.0));
      ad::Var b = ad::artanh(0.5 * ad::tanh(v)) + ad::log(1.5 + ad::tanh(v));
      ad::Var r = ad::tanh_ratio(v) + ad::artanh_ratio(0.4 * ad::tanh(v));
      return ad::sum(a * b + r) + ad::sum(ad::row_norm(v));
    };
    return std::pair{f, x};
  });

  grad_check("matrix_ops", 0x22, [](Rng& rng) {
    Mat x = gaussian_mat(rng, 4, 4, 0.5);
    Mat w = gaussian_mat(rng, 4, 2);
    GradFn f = [w](ad::Tape& t, ad::Var v) {
      ad::Var s = ad::matmul(v, ad::transpose(v)) + t.constant(Mat::Identity(4, 4));
      ad::Var m = ad::col_mean(ad::matmul(v, t.constant(w)));
      return ad::logdet(s) + 0.5 * ad::trace(s) + ad::sum(ad::outer(ad::transpose(m), ad::transpose(m)));
    };
    return std::pair{f, x};
  });

  grad_check("projection_smooth_branches", 0x23, [](Rng& rng) {
    Mat x = gaussian_mat(rng, 6, 3);
    // Rows 0..2 well inside, rows 3..5 well outside the radius-1 ball.
    for (Eigen::Index i = 0; i < 6; ++i) {
      x.row(i) *= (i < 3 ? 0.5 : 2.0) / x.row(i).norm();
    }
    Mat w = gaussian_mat(rng, 6, 3);
    GradFn f = [w](ad::Tape& t, ad::Var v) {
      return ad::sum(ad::project_rows(v, 1.0) * t.constant(w));
    };
    return std::pair{f, x};
  });

  grad_check("euclidean_align_uniform", 0x24, [](Rng& rng) {
    const Eigen::Index n = 6, d = 3;
    Mat x = gaussian_mat(rng, n, d);
    Mat shift = gaussian_mat(rng, n, d, 0.3);
    const double t = uniform(rng, 0.5, 3.0);
    GradFn f = [shift, t](ad::Tape& tape, ad::Var v) {
      auto e = losses::euclidean_align_uniform(v, v + tape.constant(shift), t);
      return e.align + e.uniform;
    };
    return std::pair{f, x};
  });

  grad_check("alignment_hyperbolic", 0x25, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    Mat x = ball_rows(rng, 6, 3, c, 0.7);
    Mat y = ball_rows(rng, 6, 3, c, 0.7);
    GradFn f = [y, c](ad::Tape& tape, ad::Var v) {
      return losses::alignment_hyperbolic(v, tape.constant(y), Curvature(c));
    };
    return std::pair{f, x};
  });

  grad_check("uniformity_hyperbolic_naive", 0x26, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    const double t = uniform(rng, 0.5, 3.0);
    Mat x = ball_rows(rng, 6, 3, c, 0.8);
    GradFn f = [c, t](ad::Tape&, ad::Var v) {
      return losses::uniformity_hyperbolic_naive(v, t, Curvature(c));
    };
    return std::pair{f, x};
  });

  grad_check("isotropy_tangent", 0x27, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    const Eigen::Index d = 3;
    Mat x = ball_rows(rng, 8, d, c, 0.8);
    Mat y = ball_rows(rng, 8, d, c, 0.8);
    GradFn f = [y, c](ad::Tape& tape, ad::Var v) {
      return losses::isotropy_tangent(v, tape.constant(y), Curvature(c));
    };
    return std::pair{f, x};
  });

  grad_check("isotropy_tangent_shifted_target", 0x28, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    const Eigen::Index d = 4;
    Mat x = ball_rows(rng, 8, d, c, 0.8);
    Mat y = ball_rows(rng, 8, d, c, 0.8);
    const TangentTarget target = TangentTarget::shifted_degraded(d, uniform(rng, -1.0, 1.0), 0.5, rng());
    GradFn f = [y, c, target](ad::Tape& tape, ad::Var v) {
      return losses::isotropy_tangent(v, tape.constant(y), Curvature(c), target);
    };
    return std::pair{f, x};
  });

  grad_check("total_loss_hypergcl", 0x29, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    Mat x = ball_rows(rng, 8, 3, c, 0.8);
    Mat y = ball_rows(rng, 8, 3, c, 0.8);
    const LossWeights w(uniform(rng, 0.1, 2.0), 2.0);
    GradFn f = [y, c, w](ad::Tape& tape, ad::Var v) {
      return losses::total_loss(v, tape.constant(y), w, Curvature(c), LossVariant::kHyperGcl).total;
    };
    return std::pair{f, x};
  });

  grad_check("total_loss_tangent_euclidean", 0x2A, [](Rng& rng) {
    const double c = uniform(rng, 0.3, 2.0);
    Mat x = ball_rows(rng, 6, 3, c, 0.8);
    Mat y = ball_rows(rng, 6, 3, c, 0.8);
    GradFn f = [y, c](ad::Tape& tape, ad::Var v) {
      return losses::total_loss(v, tape.constant(y), LossWeights(), Curvature(c),
                                LossVariant::kTangentEuclidean)
          .total;
    };
    return std::pair{f, x};
  });

  // Encoder: gradient of a loss on two views w.r.t. theta1 and theta2. Weights are
  // scaled so outputs stay inside the projection margin (smooth branch).
  auto encoder_case = [](Rng& rng, bool wrt_first) {
    Graph g;
    g.n = 7;
    g.edges = {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {0, 3}};
    g.features = gaussian_mat(rng, g.n, 4);
    Graph g2 = g;
    g2.edges.pop_back();
    GcnParams p = GcnParams::init(4, 5, 3, rng());
    p.theta1 *= 0.3;
    p.theta2 *= 0.3;
    p.slope1 = uniform(rng, 0.1, 0.4);
    p.slope2 = uniform(rng, 0.1, 0.4);
    const auto a1 = normalize_adjacency(g);
    const auto a2 = normalize_adjacency(g2);
    const Curvature c(1.0);
    Mat x = wrt_first ? p.theta1 : p.theta2;
    GradFn f = [=](ad::Tape& t, ad::Var v) {
      GcnVars vars = GcnVars::on(t, p);
      (wrt_first ? vars.theta1 : vars.theta2) = v;
      ad::Var z1 = encode(a1, t.constant(g.features), vars, c);
      ad::Var z2 = encode(a2, t.constant(g2.features), vars, c);
      return losses::total_loss(z1, z2, LossWeights(), c, LossVariant::kHyperGcl).total;
    };
    return std::pair{f, x};
  };
  grad_check("encoder_theta1", 0x2B, [&](Rng& rng) { return encoder_case(rng, true); });
  grad_check("encoder_theta2", 0x2C, [&](Rng& rng) { return encoder_case(rng, false); });
}

void density_suite(const Options& o, std::vector<PropertyResult>& out) {
  Recorder rec("density", out);
  struct Cfg {
    double sigma, c;
    int d;
  };
  for (const Cfg& cfg : {Cfg{0.3, 1.0, 1}, Cfg{1.0, 1.0, 1}, Cfg{0.7, 1.0, 2}, Cfg{1.2, 0.6, 2}}) {
    char name[96];
    std::snprintf(name, sizeof name, "integral_sigma%g_c%g_d%d", cfg.sigma, cfg.c, cfg.d);
    rec.check(name, 1e-3, 1, [cfg] {
      const auto spec = AmbientDensitySpec::isotropic(cfg.d, cfg.sigma, Curvature(cfg.c));
      return std::abs(integrate_density(spec) - 1.0);
    });
  }

  rec.check("monte_carlo_radius_ks", 0.01, 100000, [&] {
    const auto spec = AmbientDensitySpec::isotropic(2, 1.0, Curvature(1.0));
    const Mat z = sample_ambient(100000, spec, o.seed ^ 0x31);
    std::vector<double> radii(static_cast<std::size_t>(z.rows()));
    for (Eigen::Index i = 0; i < z.rows(); ++i) radii[static_cast<std::size_t>(i)] = z.row(i).norm();
    return ks_statistic_radii(std::move(radii), spec);
  });

  // Jacobian of log0 against a central-difference determinant.
  rec.check("log0_jacobian_matches_numeric", 1e-6, 200, [&] {
    Rng rng(o.seed ^ 0x32);
    double worst = 0.0;
    for (int k = 0; k < 200; ++k) {
      const double c = uniform(rng, 0.3, 2.0);
      const Eigen::Index d = 1 + k % 4;
      const Vec z = ball_point(rng, d, c, 0.9);
      Mat jac(d, d);
      const double h = 1e-6 / std::sqrt(c);
      for (Eigen::Index j = 0; j < d; ++j) {
        Vec zp = z, zm = z;
        zp(j) += h;
        zm(j) -= h;
        jac.col(j) = (poincare::log0(zp, c) - poincare::log0(zm, c)) / (2.0 * h);
      }
      const double expected = jac.determinant();
      worst = std::max(worst, std::abs(log0_jacobian(z, Curvature(c)) - expected) / expected);
    }
    return worst;
  });

  rec.check("density_nonnegative_and_zero_outside", 0.0, 1000, [&] {
    Rng rng(o.seed ^ 0x33);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double c = uniform(rng, 0.3, 2.0);
      const Eigen::Index d = 1 + k % 3;
      const auto spec = AmbientDensitySpec::isotropic(d, uniform(rng, 0.2, 2.0), Curvature(c));
      const Vec in = ball_point(rng, d, c, 0.999);
      Vec outside = gaussian_vec(rng, d);
      outside *= uniform(rng, 1.0, 2.0) / (std::sqrt(c) * outside.norm());
      const double pin = ambient_density(in, spec);
      if (!(pin >= 0.0) || !std::isfinite(pin)) worst = std::max(worst, 1.0);
      worst = std::max(worst, std::abs(ambient_density(outside, spec)));
    }
    return worst;
  });
}

std::vector<double> ranks(const std::vector<double>& x) {
  std::vector<std::size_t> idx(x.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> r(x.size());
  for (std::size_t i = 0; i < idx.size();) {
    std::size_t j = i;
    while (j + 1 < idx.size() && x[idx[j + 1]] == x[idx[i]]) ++j;
    const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) r[idx[k]] = avg;
    i = j + 1;
  }
  return r;
}

Mat random_spd(Rng& rng, Eigen::Index d) {
  // Random orthogonal basis with log-uniform eigenvalues over 4 decades.
  const Mat q = Eigen::HouseholderQR<Mat>(gaussian_mat(rng, d, d)).householderQ();
  Vec ev(d);
  for (Eigen::Index i = 0; i < d; ++i) ev(i) = std::pow(10.0, uniform(rng, -2.0, 2.0));
  Mat s = q * ev.asDiagonal() * q.transpose();
  return 0.5 * (s + s.transpose());
}

void spectral_suite(const Options& o, std::vector<PropertyResult>& out) {
  Recorder rec("spectral", out);
  const int n = o.spectral_samples;

  rec.check("erank_lower_bound", 0.0, n, [&] {
    Rng rng(o.seed ^ 0x41);
    double violations = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 16);
      CovarianceSummary s{gaussian_vec(rng, d, uniform(rng, 0.0, 1.0)), random_spd(rng, d)};
      if (!erank_bound_check(s).holds) violations += 1.0;
    }
    return violations;
  }, "count of covariances violating -D <= log Erank - log d");

  rec.check("kl_nonnegative_zero_at_standard", 1e-9, n, [&] {
    Rng rng(o.seed ^ 0x42);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 16);
      CovarianceSummary s{gaussian_vec(rng, d), random_spd(rng, d)};
      worst = std::max(worst, std::max(0.0, -gaussian_kl(s, 0.0)));
    }
    CovarianceSummary id{Vec::Zero(8), Mat::Identity(8, 8)};
    worst = std::max(worst, std::abs(gaussian_kl(id, 0.0)));
    return worst;
  });

  rec.check("erank_between_one_and_rank", 1e-9, n, [&] {
    Rng rng(o.seed ^ 0x43);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index r = 1 + static_cast<Eigen::Index>(k % 6);
      const Mat m = gaussian_mat(rng, 12, r) * gaussian_mat(rng, r, 8);
      const double e = effective_rank(m);
      worst = std::max(worst, std::max(1.0 - e, e - static_cast<double>(r)));
    }
    return worst;
  });

  rec.check("jacobi_svd_matches_reference", 1e-10, n, [&] {
    Rng rng(o.seed ^ 0x44);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index r = 1 + static_cast<Eigen::Index>(k % 12);
      const Eigen::Index c = 1 + static_cast<Eigen::Index>((k / 12) % 9);
      const Mat m = gaussian_mat(rng, r, c);
      const Vec ours = linalg::jacobi_singular_values(m);
      const Vec ref = Eigen::BDCSVD<Mat>(m).singularValues();
      worst = std::max(worst, (ours - ref).cwiseAbs().maxCoeff() / std::max(1.0, ref(0)));
    }
    return worst;
  });

  rec.check("jacobi_eigen_matches_reference", 1e-10, n, [&] {
    Rng rng(o.seed ^ 0x45);
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
      const Eigen::Index d = 1 + static_cast<Eigen::Index>(k % 12);
      Mat s = gaussian_mat(rng, d, d);
      s = 0.5 * (s + s.transpose()).eval();
      const linalg::SymmetricEigen ours = linalg::jacobi_eigen(s);
      const Vec ref = Eigen::SelfAdjointEigenSolver<Mat>(s).eigenvalues().reverse();
      const double scale = std::max(1.0, ref.cwiseAbs().maxCoeff());
      worst = std::max(worst, (ours.values - ref).cwiseAbs().maxCoeff() / scale);
      const Mat rebuilt = ours.vectors * ours.values.asDiagonal() * ours.vectors.transpose();
      worst = std::max(worst, (rebuilt - s).cwiseAbs().maxCoeff() / scale);
    }
    return worst;
  });

  // Plain gradient descent on D(A A^T, 0) from an anisotropic start.
  rec.check("kl_descent_raises_erank", 0.1, 1, [&] {
    Rng rng(o.seed ^ 0x46);
    const Eigen::Index d = 8;
    Mat a = gaussian_mat(rng, d, d);
    for (Eigen::Index j = 0; j < d; ++j) a.col(j) *= std::pow(0.4, static_cast<double>(j));
    std::vector<double> steps, eranks;
    const TangentTarget target = TangentTarget::standard(d);
    for (int it = 0; it < 200; ++it) {
      ad::Tape tape;
      ad::Var av = tape.variable(a);
      spectral_ops::TapeMoments m{tape.constant(Mat::Zero(1, d)), ad::matmul(av, ad::transpose(av))};
      ad::Var kl = spectral_ops::gaussian_kl(m, target);
      tape.backward(kl);
      steps.push_back(it);
      eranks.push_back(covariance_effective_rank(m.sigma.value()));
      a -= 0.02 * av.grad();
    }
    return 1.0 - spearman(steps, eranks);
  }, "1 - Spearman rho between iteration and Erank");
}

}  // namespace

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"geometry", "autodiff", "density", "spectral"};
  return names;
}

std::vector<PropertyResult> run(const std::string& suite, const Options& opts) {
  std::vector<PropertyResult> out;
  auto one = [&](const std::string& s) {
    if (s == "geometry") {
      geometry_suite(opts, out);
    } else if (s == "autodiff") {
      autodiff_suite(opts, out);
    } else if (s == "density") {
      density_suite(opts, out);
    } else if (s == "spectral") {
      spectral_suite(opts, out);
    } else {
      throw std::invalid_argument("unknown suite: " + s);
    }
  };
  if (suite == "all") {
    for (const auto& s : suite_names()) one(s);
  } else {
    one(suite);
  }
  return out;
}

bool all_passed(const std::vector<PropertyResult>& results) {
  return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
}

nlohmann::json report(const std::vector<PropertyResult>& results) {
  nlohmann::json props = nlohmann::json::array();
  for (const auto& r : results) {
    nlohmann::json j{{"suite", r.suite},         {"name", r.name},       {"passed", r.passed},
                     {"samples", r.samples},     {"tolerance", r.tolerance}};
    j["worst"] = std::isfinite(r.worst) ? nlohmann::json(r.worst) : nlohmann::json(nullptr);
    if (!r.detail.empty()) j["detail"] = r.detail;
    props.push_back(std::move(j));
  }
  return {{"passed", all_passed(results)}, {"properties", props}};
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("pearson needs two equal-length series of at least 2 values");
  }
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(ranks(x), ranks(y));
}

}  // namespace hypergcl::verify
