#include "hypergcl/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include <Eigen/Cholesky>
#include <Eigen/SparseCore>

namespace hypergcl::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) throw std::invalid_argument("node is not a scalar");
  return v(0, 0);
}

Var Tape::variable(Matrix value) {
  if (!value.allFinite()) throw NonFiniteError("variable initialized with a non-finite value");
  nodes_.push_back(Node{std::move(value), Matrix(), {}, nullptr, true});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  if (!value.allFinite()) throw NonFiniteError("constant initialized with a non-finite value");
  nodes_.push_back(Node{std::move(value), Matrix(), {}, nullptr, false});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(double value) { return constant(Matrix::Constant(1, 1, value)); }

Var Tape::record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward,
                 const char* op_name) {
  if (!value.allFinite()) {
    throw NonFiniteError(std::string(op_name) + " produced a non-finite value");
  }
  bool needs = false;
  for (std::size_t in : inputs) needs = needs || nodes_[in].requires_grad;
  nodes_.push_back(Node{std::move(value), Matrix(), std::move(inputs),
                        needs ? std::move(backward) : nullptr, needs});
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (n.grad.size() == 0 && n.value.size() != 0) {
    throw std::logic_error("gradient requested before backward()");
  }
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  n.grad += g;
}

void Tape::backward(Var output) {
  if (&output.tape() != this) throw std::invalid_argument("output belongs to another tape");
  if (output.value().size() != 1) {
    throw std::invalid_argument("backward requires a scalar output");
  }
  for (Node& n : nodes_) n.grad = Matrix::Zero(n.value.rows(), n.value.cols());
  nodes_[output.id()].grad(0, 0) = 1.0;
  for (std::size_t i = output.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward) continue;
    if (!n.grad.allFinite()) throw NonFiniteError("non-finite gradient during backward");
    n.backward(*this, i);
  }
}

namespace {

std::pair<Eigen::Index, Eigen::Index> broadcast_shape(const Matrix& a, const Matrix& b) {
  auto dim = [](Eigen::Index x, Eigen::Index y) {
    if (x == y || y == 1) return x;
    if (x == 1) return y;
    throw std::invalid_argument("shape mismatch: " + std::to_string(x) + " vs " +
                                std::to_string(y));
  };
  return {dim(a.rows(), b.rows()), dim(a.cols(), b.cols())};
}

Matrix expand(const Matrix& m, Eigen::Index rows, Eigen::Index cols) {
  if (m.rows() == rows && m.cols() == cols) return m;
  return m.replicate(rows / m.rows(), cols / m.cols());
}

// Sums a broadcast gradient back down to the operand's shape.
Matrix reduce_to(const Matrix& g, Eigen::Index rows, Eigen::Index cols) {
  if (g.rows() == rows && g.cols() == cols) return g;
  Matrix r = g;
  if (rows == 1 && r.rows() != 1) r = r.colwise().sum().eval();
  if (cols == 1 && r.cols() != 1) r = r.rowwise().sum().eval();
  return r;
}

template <typename Forward, typename Backward>
Var binary(Var a, Var b, Forward fwd, Backward bwd, const char* name) {
  if (&a.tape() != &b.tape()) throw std::invalid_argument("operands live on different tapes");
  Tape& t = a.tape();
  const auto [r, c] = broadcast_shape(a.value(), b.value());
  Matrix ea = expand(a.value(), r, c);
  Matrix eb = expand(b.value(), r, c);
  Matrix out = fwd(ea, eb);
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      std::move(out), {ia, ib},
      [ia, ib, r, c, bwd](Tape& tp, std::size_t self) {
        const Matrix xa = expand(tp.value(ia), r, c);
        const Matrix xb = expand(tp.value(ib), r, c);
        const Matrix& g = tp.upstream(self);
        Matrix ga, gb;
        bwd(g, xa, xb, tp.value(self), ga, gb);
        if (tp.requires_grad(ia)) {
          tp.accumulate(ia, reduce_to(ga, tp.value(ia).rows(), tp.value(ia).cols()));
        }
        if (tp.requires_grad(ib)) {
          tp.accumulate(ib, reduce_to(gb, tp.value(ib).rows(), tp.value(ib).cols()));
        }
      },
      name);
}

// Elementwise unary op given f(x) and f'(x, f(x)).
template <typename F, typename DF>
Var unary(Var a, F f, DF df, const char* name) {
  Tape& t = a.tape();
  Matrix out = a.value().unaryExpr(f);
  const std::size_t ia = a.id();
  return t.record(
      std::move(out), {ia},
      [ia, df](Tape& tp, std::size_t self) {
        const Matrix& x = tp.value(ia);
        const Matrix& y = tp.value(self);
        Matrix d = x.binaryExpr(y, df);
        tp.accumulate(ia, tp.upstream(self).cwiseProduct(d));
      },
      name);
}

Var scalar_const(Var like, double s) { return like.tape().constant(s); }

}  // namespace

Var operator+(Var a, Var b) {
  return binary(
      a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x + y); },
      [](const Matrix& g, const Matrix&, const Matrix&, const Matrix&, Matrix& ga, Matrix& gb) {
        ga = g;
        gb = g;
      },
      "add");
}

Var operator-(Var a, Var b) {
  return binary(
      a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x - y); },
      [](const Matrix& g, const Matrix&, const Matrix&, const Matrix&, Matrix& ga, Matrix& gb) {
        ga = g;
        gb = -g;
      },
      "sub");
}

Var operator*(Var a, Var b) {
  return binary(
      a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x.cwiseProduct(y)); },
      [](const Matrix& g, const Matrix& x, const Matrix& y, const Matrix&, Matrix& ga,
         Matrix& gb) {
        ga = g.cwiseProduct(y);
        gb = g.cwiseProduct(x);
      },
      "hadamard");
}

Var operator/(Var a, Var b) {
  return binary(
      a, b, [](const Matrix& x, const Matrix& y) { return Matrix(x.cwiseQuotient(y)); },
      [](const Matrix& g, const Matrix&, const Matrix& y, const Matrix& out, Matrix& ga,
         Matrix& gb) {
        ga = g.cwiseQuotient(y);
        gb = -g.cwiseProduct(out).cwiseQuotient(y);
      },
      "div");
}

Var operator-(Var a) { return a * -1.0; }

Var operator+(Var a, double s) {
  return unary(
      a, [s](double x) { return x + s; }, [](double, double) { return 1.0; }, "add_scalar");
}
Var operator+(double s, Var a) { return a + s; }
Var operator-(Var a, double s) { return a + (-s); }
Var operator-(double s, Var a) { return (a * -1.0) + s; }

Var operator*(Var a, double s) {
  return unary(
      a, [s](double x) { return x * s; }, [s](double, double) { return s; }, "scale");
}
Var operator*(double s, Var a) { return a * s; }
Var operator/(Var a, double s) { return a * (1.0 / s); }
Var operator/(double s, Var a) { return scalar_const(a, s) / a; }

Var matmul(Var a, Var b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument("matmul shape mismatch: " + std::to_string(a.cols()) + " vs " +
                                std::to_string(b.rows()));
  }
  Tape& t = a.tape();
  const std::size_t ia = a.id(), ib = b.id();
  return t.record(
      a.value() * b.value(), {ia, ib},
      [ia, ib](Tape& tp, std::size_t self) {
        const Matrix& g = tp.upstream(self);
        if (tp.requires_grad(ia)) tp.accumulate(ia, g * tp.value(ib).transpose());
        if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * g);
      },
      "matmul");
}

Var spmm(const SparseMatrix& a, Var x) {
  if (a.cols() != x.rows()) throw std::invalid_argument("spmm shape mismatch");
  Tape& t = x.tape();
  const std::size_t ix = x.id();
  Matrix out = a * x.value();
  // The sparse operand is captured by value; it is a constant of the graph.
  return t.record(
      std::move(out), {ix},
      [ix, a](Tape& tp, std::size_t self) {
        tp.accumulate(ix, Matrix(a.transpose() * tp.upstream(self)));
      },
      "spmm");
}

Var transpose(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  return t.record(
      a.value().transpose(), {ia},
      [ia](Tape& tp, std::size_t self) { tp.accumulate(ia, tp.upstream(self).transpose()); },
      "transpose");
}

Var outer(Var u, Var v) {
  if (u.cols() != 1 || v.cols() != 1) throw std::invalid_argument("outer expects column vectors");
  return matmul(u, transpose(v));
}

Var sum(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows(), c = a.cols();
  return t.record(
      Matrix::Constant(1, 1, a.value().sum()), {ia},
      [ia, r, c](Tape& tp, std::size_t self) {
        tp.accumulate(ia, Matrix::Constant(r, c, tp.upstream(self)(0, 0)));
      },
      "sum");
}

Var row_sum(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  const Eigen::Index c = a.cols();
  return t.record(
      a.value().rowwise().sum(), {ia},
      [ia, c](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.upstream(self).replicate(1, c));
      },
      "row_sum");
}

Var col_mean(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  const Eigen::Index r = a.rows();
  return t.record(
      a.value().colwise().mean(), {ia},
      [ia, r](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.upstream(self).replicate(r, 1) / static_cast<double>(r));
      },
      "col_mean");
}

Var mean(Var a) { return sum(a) / static_cast<double>(a.value().size()); }

Var row_norm(Var a) {
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  return t.record(
      a.value().rowwise().norm(), {ia},
      [ia](Tape& tp, std::size_t self) {
        const Matrix& x = tp.value(ia);
        const Matrix& n = tp.value(self);
        const Matrix& g = tp.upstream(self);
        Matrix gx(x.rows(), x.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i) {
          if (n(i, 0) > 0.0) {
            gx.row(i) = g(i, 0) / n(i, 0) * x.row(i);
          } else {
            gx.row(i).setZero();
          }
        }
        tp.accumulate(ia, gx);
      },
      "row_norm");
}

Var square(Var a) {
  return unary(
      a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; }, "square");
}

Var sqrt(Var a) {
  if ((a.value().array() < 0.0).any()) throw std::domain_error("sqrt of a negative value");
  return unary(
      a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; },
      "sqrt");
}

Var exp(Var a) {
  return unary(
      a, [](double x) { return std::exp(x); }, [](double, double y) { return y; }, "exp");
}

Var log(Var a) {
  if ((a.value().array() <= 0.0).any()) throw std::domain_error("log of a nonpositive value");
  return unary(
      a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; }, "log");
}

Var tanh(Var a) {
  return unary(
      a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; },
      "tanh");
}

Var artanh(Var a) {
  if ((a.value().array().abs() >= 1.0).any()) {
    throw std::domain_error("artanh argument outside (-1, 1)");
  }
  return unary(
      a, [](double x) { return std::atanh(x); }, [](double x, double) { return 1.0 / (1.0 - x * x); },
      "artanh");
}

Var tanh_ratio(Var a) {
  return unary(
      a,
      [](double x) {
        if (std::abs(x) < 1e-4) {
          const double x2 = x * x;
          return 1.0 - x2 / 3.0 + 2.0 * x2 * x2 / 15.0;
        }
        return std::tanh(x) / x;
      },
      [](double x, double) {
        if (std::abs(x) < 1e-3) {
          const double x2 = x * x;
          return x * (-2.0 / 3.0 + x2 * (8.0 / 15.0 - x2 * 102.0 / 315.0));
        }
        const double th = std::tanh(x);
        return (x * (1.0 - th * th) - th) / (x * x);
      },
      "tanh_ratio");
}

Var artanh_ratio(Var a) {
  if ((a.value().array().abs() >= 1.0).any()) {
    throw std::domain_error("artanh argument outside (-1, 1)");
  }
  return unary(
      a,
      [](double x) {
        if (std::abs(x) < 1e-4) {
          const double x2 = x * x;
          return 1.0 + x2 / 3.0 + x2 * x2 / 5.0;
        }
        return std::atanh(x) / x;
      },
      [](double x, double) {
        if (std::abs(x) < 1e-3) {
          const double x2 = x * x;
          return x * (2.0 / 3.0 + x2 * (4.0 / 5.0 + x2 * 6.0 / 7.0));
        }
        return (x / (1.0 - x * x) - std::atanh(x)) / (x * x);
      },
      "artanh_ratio");
}

Var clamp(Var a, double lo, double hi) {
  return unary(
      a, [lo, hi](double x) { return std::clamp(x, lo, hi); },
      [lo, hi](double x, double) { return (x > lo && x < hi) ? 1.0 : 0.0; }, "clamp");
}

Var prelu(Var x, Var slope) {
  if (slope.value().size() != 1) throw std::invalid_argument("prelu slope must be 1x1");
  Tape& t = x.tape();
  const double s = slope.scalar();
  Matrix out = x.value().unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
  const std::size_t ix = x.id(), is = slope.id();
  return t.record(
      std::move(out), {ix, is},
      [ix, is](Tape& tp, std::size_t self) {
        const Matrix& xv = tp.value(ix);
        const double sv = tp.value(is)(0, 0);
        const Matrix& g = tp.upstream(self);
        if (tp.requires_grad(ix)) {
          tp.accumulate(ix, g.cwiseProduct(
                                xv.unaryExpr([sv](double v) { return v > 0.0 ? 1.0 : sv; })));
        }
        if (tp.requires_grad(is)) {
          const double gs =
              g.cwiseProduct(xv.unaryExpr([](double v) { return v > 0.0 ? 0.0 : v; })).sum();
          tp.accumulate(is, Matrix::Constant(1, 1, gs));
        }
      },
      "prelu");
}

Var trace(Var a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("trace of a non-square matrix");
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  const Eigen::Index n = a.rows();
  return t.record(
      Matrix::Constant(1, 1, a.value().trace()), {ia},
      [ia, n](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.upstream(self)(0, 0) * Matrix::Identity(n, n));
      },
      "trace");
}

Var logdet(Var a) {
  if (a.rows() != a.cols()) throw std::invalid_argument("logdet of a non-square matrix");
  Tape& t = a.tape();
  const Eigen::LLT<Matrix> llt(a.value());
  if (llt.info() != Eigen::Success) {
    throw std::domain_error("logdet requires a symmetric positive definite matrix");
  }
  const Matrix& l = llt.matrixLLT();
  double ld = 0.0;
  for (Eigen::Index i = 0; i < l.rows(); ++i) ld += 2.0 * std::log(l(i, i));
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  inv = (0.5 * (inv + inv.transpose())).eval();
  const std::size_t ia = a.id();
  return t.record(
      Matrix::Constant(1, 1, ld), {ia},
      [ia, inv = std::move(inv)](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.upstream(self)(0, 0) * inv);
      },
      "logdet");
}

Var project_rows(Var a, double max_norm) {
  Tape& t = a.tape();
  const Matrix& x = a.value();
  const Eigen::VectorXd norms = x.rowwise().norm();
  Matrix out = x;
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (norms(i) > max_norm) out.row(i) *= max_norm / norms(i);
  }
  const std::size_t ia = a.id();
  return t.record(
      std::move(out), {ia},
      [ia, max_norm, norms](Tape& tp, std::size_t self) {
        const Matrix& xv = tp.value(ia);
        const Matrix& g = tp.upstream(self);
        Matrix gx = g;
        for (Eigen::Index i = 0; i < xv.rows(); ++i) {
          const double n = norms(i);
          if (n >= max_norm && n > 0.0) {
            const double radial = xv.row(i).dot(g.row(i)) / (n * n);
            gx.row(i) = max_norm / n * (g.row(i) - radial * xv.row(i));
          }
        }
        tp.accumulate(ia, gx);
      },
      "project_rows");
}

Var log_mean_exp(Var a, const Matrix& weights) {
  if (weights.rows() != a.rows() || weights.cols() != a.cols()) {
    throw std::invalid_argument("log_mean_exp weight shape mismatch");
  }
  const double wsum = weights.sum();
  if (!(wsum > 0.0)) throw std::invalid_argument("log_mean_exp needs positive total weight");
  const Matrix& x = a.value();
  double m = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (weights(k) > 0.0) m = std::max(m, x(k));
  }
  Matrix e = (x.array() - m).exp().matrix().cwiseProduct(weights);
  const double s = e.sum();
  Tape& t = a.tape();
  const std::size_t ia = a.id();
  return t.record(
      Matrix::Constant(1, 1, m + std::log(s / wsum)), {ia},
      [ia, e = std::move(e), s](Tape& tp, std::size_t self) {
        tp.accumulate(ia, tp.upstream(self)(0, 0) / s * e);
      },
      "log_mean_exp");
}

double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Matrix& x, double h) {
  Matrix analytic;
  {
    Tape tape;
    Var xv = tape.variable(x);
    Var y = f(tape, xv);
    if (!std::isfinite(y.scalar())) throw NonFiniteError("function value is not finite");
    tape.backward(y);
    analytic = xv.grad();
  }
  auto eval = [&f](const Matrix& at) {
    Tape tape;
    Var y = f(tape, tape.variable(at));
    const double v = y.scalar();
    if (!std::isfinite(v)) throw NonFiniteError("function value is not finite");
    return v;
  };
  double worst = 0.0;
  Matrix probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double step = h * std::max(1.0, std::abs(x(k)));
    probe(k) = x(k) + step;
    const double fp = eval(probe);
    probe(k) = x(k) - step;
    const double fm = eval(probe);
    probe(k) = x(k);
    const double fd = (fp - fm) / (2.0 * step);
    worst = std::max(worst, std::abs(analytic(k) - fd) / (std::abs(analytic(k)) + 1e-8));
  }
  return worst;
}

}  // namespace hypergcl::ad
