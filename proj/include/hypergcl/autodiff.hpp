#pragma once

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace hypergcl::ad {

using Matrix = Eigen::MatrixXd;
using SparseMatrix = Eigen::SparseMatrix<double>;

class Tape;

/// Thrown when an op produces NaN or Inf.
class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Handle to a node recorded on a tape. Cheap to copy; the tape owns the data.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  std::size_t id() const { return id_; }
  const Matrix& value() const;
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 node.
  double scalar() const;

 private:
  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Records a computation as an ordered list of nodes; insertion order is a
/// topological order, so backward is a single reverse sweep.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf that never receives a gradient.
  Var constant(Matrix value);
  Var constant(double value);

  /// Reverse sweep from a scalar output. Gradients of earlier calls are cleared.
  void backward(Var output);

  void reset() { nodes_.clear(); }
  std::size_t size() const { return nodes_.size(); }

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }

  // Op authoring interface.
  Var record(Matrix value, std::vector<std::size_t> inputs, BackwardFn backward,
             const char* op_name);
  const Matrix& upstream(std::size_t id) const { return nodes_[id].grad; }
  void accumulate(std::size_t id, const Matrix& g);

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
};

// Elementwise binary ops broadcast in 2-D: each dimension must match or be 1.
Var operator+(Var a, Var b);
Var operator-(Var a, Var b);
Var operator*(Var a, Var b);
Var operator/(Var a, Var b);
Var operator-(Var a);
Var operator+(Var a, double s);
Var operator+(double s, Var a);
Var operator-(Var a, double s);
Var operator-(double s, Var a);
Var operator*(Var a, double s);
Var operator*(double s, Var a);
Var operator/(Var a, double s);
Var operator/(double s, Var a);

Var matmul(Var a, Var b);
/// Sparse constant times dense node.
Var spmm(const SparseMatrix& a, Var x);
Var transpose(Var a);
/// u v^T for column vectors (or rows of matching length via transpose).
Var outer(Var u, Var v);

Var sum(Var a);
/// N x d -> N x 1.
Var row_sum(Var a);
/// N x d -> 1 x d.
Var col_mean(Var a);
Var mean(Var a);
/// N x d -> N x 1 Euclidean row norms; subgradient 0 at a zero row.
Var row_norm(Var a);

Var square(Var a);
Var sqrt(Var a);
Var exp(Var a);
Var log(Var a);
Var tanh(Var a);
Var artanh(Var a);
/// tanh(x)/x elementwise, smooth through 0.
Var tanh_ratio(Var a);
/// artanh(x)/x elementwise, smooth through 0.
Var artanh_ratio(Var a);
/// Elementwise clamp; gradient passes only where lo < x < hi.
Var clamp(Var a, double lo, double hi);
/// max(x, 0) + slope * min(x, 0) with a learnable 1x1 slope.
Var prelu(Var x, Var slope);

Var trace(Var a);
/// log det of an SPD matrix via Cholesky. Throws std::domain_error otherwise.
Var logdet(Var a);
/// Row-wise rescale onto the ball of radius max_norm when a row exceeds it.
Var project_rows(Var a, double max_norm);
/// log(sum(w .* exp(a)) / sum(w)) for a constant nonnegative weight mask w.
Var log_mean_exp(Var a, const Matrix& weights);

/// Max over coordinates of |analytic - central difference| / (|analytic| + 1e-8).
/// The step for coordinate i is h * max(1, |x_i|).
double finite_diff_check(const std::function<Var(Tape&, Var)>& f, const Matrix& x,
                         double h = 1e-5);

}  // namespace hypergcl::ad
