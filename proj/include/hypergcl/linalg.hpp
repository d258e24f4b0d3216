#pragma once

#include <Eigen/Core>

namespace hypergcl::linalg {

/// Singular values of m, nonincreasing, by one-sided (Hestenes) Jacobi.
Eigen::VectorXd jacobi_singular_values(const Eigen::MatrixXd& m, double tol = 1e-14,
                                       int max_sweeps = 100);

struct SymmetricEigen {
  Eigen::VectorXd values;   // nonincreasing
  Eigen::MatrixXd vectors;  // columns match values
};

/// Cyclic Jacobi eigendecomposition of a symmetric matrix.
SymmetricEigen jacobi_eigen(const Eigen::MatrixXd& s, double tol = 1e-14, int max_sweeps = 100);

}  // namespace hypergcl::linalg
