#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Eigenvalues>

#include "hypergcl/spectral.hpp"
#include "hypergcl/trainer.hpp"

namespace hypergcl {

namespace {

Eigen::MatrixXd gather(const Eigen::MatrixXd& x, const std::vector<int>& idx) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(idx.size()), x.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) out.row(static_cast<Eigen::Index>(k)) = x.row(idx[k]);
  return out;
}

}  // namespace

double linear_eval_features(const Eigen::MatrixXd& x, const std::vector<int>& labels,
                            const Splits& splits, const EvalConfig& cfg) {
  if (splits.train.empty() || splits.test.empty()) {
    throw std::invalid_argument("linear_eval needs nonempty train and test splits");
  }
  if (static_cast<Eigen::Index>(labels.size()) != x.rows()) {
    throw std::invalid_argument("linear_eval: label count does not match rows");
  }
  for (const auto* part : {&splits.train, &splits.test}) {
    for (int i : *part) {
      if (i < 0 || i >= x.rows()) throw std::invalid_argument("linear_eval: split index out of range");
    }
  }
  int k = 0;
  for (int i : splits.train) k = std::max(k, labels[static_cast<std::size_t>(i)] + 1);
  for (int i : splits.test) k = std::max(k, labels[static_cast<std::size_t>(i)] + 1);
  {
    const int first = labels[static_cast<std::size_t>(splits.train.front())];
    const bool single = std::all_of(splits.train.begin(), splits.train.end(), [&](int i) {
      return labels[static_cast<std::size_t>(i)] == first;
    });
    if (single) throw std::invalid_argument("linear_eval: train split has a single class");
  }

  // Bias folded in as a constant column.
  const Eigen::MatrixXd xt = gather(x, splits.train);
  Eigen::MatrixXd a(xt.rows(), xt.cols() + 1);
  a << xt, Eigen::VectorXd::Ones(xt.rows());
  const auto n = static_cast<double>(a.rows());
  Eigen::MatrixXd y = Eigen::MatrixXd::Zero(a.rows(), k);
  for (std::size_t r = 0; r < splits.train.size(); ++r) {
    y(static_cast<Eigen::Index>(r), labels[static_cast<std::size_t>(splits.train[r])]) = 1.0;
  }

  // Softmax cross-entropy has Lipschitz gradient bounded by 0.5 * |A^T A| / n.
  const Eigen::MatrixXd gram = a.transpose() * a / n;
  const double top = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(gram, Eigen::EigenvaluesOnly)
                         .eigenvalues()
                         .maxCoeff();
  const double step = 1.0 / (0.5 * top + cfg.l2);

  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(a.cols(), k);
  for (int it = 0; it < cfg.steps; ++it) {
    Eigen::MatrixXd logits = a * w;
    logits.colwise() -= logits.rowwise().maxCoeff();
    Eigen::MatrixXd p = logits.array().exp().matrix();
    p.array().colwise() /= p.rowwise().sum().array();
    Eigen::MatrixXd grad = a.transpose() * (p - y) / n;
    grad.topRows(a.cols() - 1) += cfg.l2 * w.topRows(a.cols() - 1);
    w -= step * grad;
  }

  const Eigen::MatrixXd xs = gather(x, splits.test);
  Eigen::MatrixXd b(xs.rows(), xs.cols() + 1);
  b << xs, Eigen::VectorXd::Ones(xs.rows());
  const Eigen::MatrixXd scores = b * w;
  int correct = 0;
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    Eigen::Index best = 0;
    scores.row(r).maxCoeff(&best);
    if (static_cast<int>(best) == labels[static_cast<std::size_t>(splits.test[static_cast<std::size_t>(r)])]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

double linear_eval(const Eigen::MatrixXd& z, const std::vector<int>& labels, const Splits& splits,
                   const Curvature& c, const EvalConfig& cfg) {
  Eigen::MatrixXd y(z.rows(), z.cols());
  for (Eigen::Index i = 0; i < z.rows(); ++i) {
    y.row(i) = poincare::log0(Eigen::VectorXd(z.row(i).transpose()), c.value()).transpose();
  }
  return linear_eval_features(y, labels, splits, cfg);
}

}  // namespace hypergcl
