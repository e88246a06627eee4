// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fgt2m/hyperbolic/poincare.hpp"
#include "fgt2m/numerics/autodiff.hpp"

// Differentiable, row-wise versions of the ball operators: every row of an
// N x n variable is one point (or tangent vector at the origin).
namespace fgt2m::hyperbolic::rows {

using numerics::Var;

Var project(const Var& x, const Curvature& k);
Var exp0(const Var& v, const Curvature& k);
Var log0(const Var& y, const Curvature& k);
/// y may be a single row broadcast against every row of x.
Var mobius_add(const Var& x, const Var& y, const Curvature& k);
/// Row convention: each row r maps to r * weight, i.e. M = weight^T.
Var mobius_matvec(const Var& x, const Var& weight, const Curvature& k);
/// N x 1 distances between corresponding rows (y may be one broadcast row).
Var distance(const Var& x, const Var& y, const Curvature& k);
Var activation(const Var& x, Activation act, const Curvature& k);
/// Row i of the result aggregates all rows with weights(i, :), which must be
/// non-negative with a positive row sum.
Var aggregate(const Var& x, const numerics::Tensor& weights, const Curvature& k);

}  // namespace fgt2m::hyperbolic::rows
