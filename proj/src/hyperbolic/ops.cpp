// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/hyperbolic/ops.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::hyperbolic::rows {

using numerics::Tensor;

namespace {

// Norms are clamped away from zero so that v / |v| stays finite; the factors
// that multiply them vanish at the origin anyway.
constexpr double kMinNorm = 1e-15;

Var row_norm(const Var& x) { return numerics::clamp_min(numerics::norm(x, 1), kMinNorm); }
Var row_dot(const Var& a, const Var& b) { return numerics::sum(a * b, 1); }

}  // namespace

Var project(const Var& x, const Curvature& k) {
  const Var n = row_norm(x);
  const double rmax = k.max_norm();
  Tensor mask(n.shape());
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (n.value()[i] > rmax) {
      mask[i] = 1.0;
      ++hits;
    }
  }
  if (hits == 0) return x;
  record_projections(hits);
  // factor = 1 + mask * (rmax / |x| - 1)
  const Var shrink = numerics::add_scalar(numerics::scale(numerics::div(numerics::constant(Tensor::scalar(1.0)), n), rmax), -1.0);
  const Var factor = numerics::add_scalar(numerics::constant(mask) * shrink, 1.0);
  return x * factor;
}

Var exp0(const Var& v, const Curvature& k) {
  const Var s = numerics::scale(row_norm(v), k.sqrt_c());
  return project(v * (numerics::tanh(s) / s), k);
}

Var log0(const Var& y, const Curvature& k) {
  const Var s = numerics::scale(row_norm(y), k.sqrt_c());
  return y * (numerics::artanh(s) / s);
}

Var mobius_add(const Var& x, const Var& y, const Curvature& k) {
  const double c = k.c();
  const Var xy = row_dot(x, y);
  const Var x2 = row_dot(x, x);
  const Var y2 = row_dot(y, y);
  const Var a = numerics::add_scalar(numerics::scale(xy, 2.0 * c) + numerics::scale(y2, c), 1.0);
  const Var b = numerics::add_scalar(numerics::scale(x2, -c), 1.0);
  const Var den = numerics::add_scalar(numerics::scale(xy, 2.0 * c) + numerics::scale(x2 * y2, c * c), 1.0);
  return project((x * a + y * b) / den, k);
}

Var mobius_matvec(const Var& x, const Var& weight, const Curvature& k) {
  const Var mx = numerics::matmul(x, weight);
  const Var xn = row_norm(x);
  const Var mxn = row_norm(mx);
  const Var inner = (mxn / xn) * numerics::artanh(numerics::scale(xn, k.sqrt_c()));
  const Var mag = numerics::scale(numerics::tanh(inner), 1.0 / k.sqrt_c());
  return project(mx * (mag / mxn), k);
}

Var distance(const Var& x, const Var& y, const Curvature& k) {
  const Var diff = mobius_add(numerics::neg(x), y, k);
  const Var n = numerics::norm(diff, 1);
  return numerics::scale(numerics::artanh(numerics::scale(n, k.sqrt_c())), 2.0 / k.sqrt_c());
}

Var activation(const Var& x, Activation act, const Curvature& k) {
  Var t = log0(x, k);
  switch (act) {
    case Activation::kIdentity: break;
    case Activation::kTanh: t = numerics::tanh(t); break;
    case Activation::kLeakyRelu: t = numerics::leaky_relu(t, 0.01); break;
  }
  return exp0(t, k);
}

Var aggregate(const Var& x, const Tensor& weights, const Curvature& k) {
  if (weights.rank() != 2 || weights.cols() != x.rows()) {
    throw Error("hyperbolic", "dimension_mismatch", "aggregation weights must be (rows x rows of x)");
  }
  Tensor normalized = weights;
  for (std::size_t r = 0; r < normalized.rows(); ++r) {
    double total = 0.0;
    for (std::size_t c = 0; c < normalized.cols(); ++c) {
      if (normalized(r, c) < 0.0) throw Error("hyperbolic", "bad_weight", "negative aggregation weight");
      total += normalized(r, c);
    }
    if (!(total > 0.0)) throw Error("hyperbolic", "bad_weight", "aggregation row sums to zero");
    for (std::size_t c = 0; c < normalized.cols(); ++c) normalized(r, c) /= total;
  }
  return exp0(numerics::matmul(numerics::constant(std::move(normalized)), log0(x, k)), k);
}

}  // namespace fgt2m::hyperbolic::rows
