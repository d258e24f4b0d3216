#pragma once

#include "hypergcl/autodiff.hpp"
#include "hypergcl/geometry.hpp"

// Row-wise Poincare ball operations recorded on a tape. Each row of an N x d
// node is one point; every function here is differentiable end to end.
namespace hypergcl::batch {

using ad::Var;

Var mobius_add(Var u, Var v, const Curvature& c);
/// N x 1 conformal factors 2 / (1 - c |x|^2).
Var conformal_factor(Var x, const Curvature& c);
Var exp0(Var v, const Curvature& c);
Var log0(Var z, const Curvature& c);
/// N x 1 distances between paired rows.
Var distance(Var p, Var q, const Curvature& c);
/// N x N matrix of distances between all rows of z. The diagonal is exactly 0.
Var pairwise_distance(Var z, const Curvature& c);
Var project(Var z, const Curvature& c, double eps = kDefaultEps);

}  // namespace hypergcl::batch
