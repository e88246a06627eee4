// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/hyperbolic/poincare.hpp"

#include <atomic>
#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::hyperbolic {

namespace {

std::atomic<std::uint64_t> g_projections{0};

// Below this norm a vector is treated as the origin.
constexpr double kTiny = 1e-15;

double dot(const Coords& a, const Coords& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Coords& a) { return dot(a, a); }

Coords scaled(const Coords& a, double f) {
  Coords out(a);
  for (double& v : out) v *= f;
  return out;
}

void require_same(const PoincarePoint& x, const PoincarePoint& y) {
  if (!(x.curvature() == y.curvature())) throw Error("hyperbolic", "curvature_mismatch", "points live in different balls");
  if (x.dim() != y.dim()) throw Error("hyperbolic", "dimension_mismatch", "points have different dimensions");
}

// Result of an operator: pull back into the shell rather than reject.
PoincarePoint inside(Coords coords, Curvature k) {
  const double n = std::sqrt(norm2(coords));
  if (n > k.max_norm()) {
    coords = scaled(coords, k.max_norm() / n);
    record_projections(1);
  }
  return PoincarePoint(std::move(coords), k);
}

}  // namespace

Curvature::Curvature(double c) : c_(c), sqrt_c_(std::sqrt(c)) {
  if (!(c > 0.0) || !std::isfinite(c)) throw Error("hyperbolic", "bad_curvature", "curvature must be positive and finite");
}

double Curvature::max_norm() const noexcept { return std::sqrt((1.0 - kBoundaryEps) / c_); }

PoincarePoint::PoincarePoint(Coords coords, Curvature curvature) : coords_(std::move(coords)), curvature_(curvature) {
  const double sq = norm2(coords_);
  if (!std::isfinite(sq)) throw Error("hyperbolic", "non_finite", "point has non-finite coordinates");
  if (curvature_.c() * sq >= 1.0) {
    throw Error("hyperbolic", "outside_ball", "point lies on or outside the ball boundary");
  }
  const double n = std::sqrt(sq);
  if (n > curvature_.max_norm()) {
    coords_ = scaled(coords_, curvature_.max_norm() / n);
    record_projections(1);
  }
}

PoincarePoint PoincarePoint::origin(std::size_t dim, Curvature curvature) {
  return PoincarePoint(Coords(dim, 0.0), curvature);
}

double PoincarePoint::norm() const { return std::sqrt(norm2(coords_)); }

double PoincarePoint::conformal_factor() const { return 2.0 / (1.0 - curvature_.c() * norm2(coords_)); }

std::uint64_t projection_count() { return g_projections.load(); }
void reset_projection_count() { g_projections.store(0); }
void record_projections(std::uint64_t n) { g_projections.fetch_add(n); }

PoincarePoint mobius_neg(const PoincarePoint& x) { return PoincarePoint(scaled(x.coords(), -1.0), x.curvature()); }

PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y) {
  require_same(x, y);
  const double c = x.curvature().c();
  const double xy = dot(x.coords(), y.coords());
  const double x2 = norm2(x.coords());
  const double y2 = norm2(y.coords());
  const double a = 1.0 + 2.0 * c * xy + c * y2;
  const double b = 1.0 - c * x2;
  const double den = 1.0 + 2.0 * c * xy + c * c * x2 * y2;
  Coords out(x.dim());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (a * x.coords()[i] + b * y.coords()[i]) / den;
  return inside(std::move(out), x.curvature());
}

PoincarePoint exp0(const Coords& v, Curvature k) {
  const double n = std::sqrt(norm2(v));
  if (!std::isfinite(n)) throw Error("hyperbolic", "non_finite", "tangent vector has non-finite coordinates");
  if (n < kTiny) return PoincarePoint(Coords(v.size(), 0.0), k);
  const double s = k.sqrt_c() * n;
  return inside(scaled(v, std::tanh(s) / s), k);
}

Coords log0(const PoincarePoint& y) {
  const double n = y.norm();
  if (n < kTiny) return Coords(y.dim(), 0.0);
  const double s = y.curvature().sqrt_c() * n;
  return scaled(y.coords(), std::atanh(s) / s);
}

PoincarePoint exp_map(const TangentVector& v) {
  const PoincarePoint& x = v.basepoint;
  if (v.coords.size() != x.dim()) throw Error("hyperbolic", "dimension_mismatch", "tangent vector dimension");
  PoincarePoint moved = exp0(scaled(v.coords, x.conformal_factor() / 2.0), x.curvature());
  return mobius_add(x, moved);
}

TangentVector log_map(const PoincarePoint& y, const PoincarePoint& basepoint) {
  require_same(y, basepoint);
  const PoincarePoint diff = mobius_add(mobius_neg(basepoint), y);
  return TangentVector{scaled(log0(diff), 2.0 / basepoint.conformal_factor()), basepoint};
}

double geodesic_distance(const PoincarePoint& x, const PoincarePoint& y) {
  require_same(x, y);
  const PoincarePoint diff = mobius_add(mobius_neg(x), y);
  const double sc = x.curvature().sqrt_c();
  return 2.0 / sc * std::atanh(sc * diff.norm());
}

PoincarePoint mobius_matvec(const numerics::Tensor& matrix, const PoincarePoint& x) {
  if (matrix.rank() != 2 || matrix.cols() != x.dim()) {
    throw Error("hyperbolic", "dimension_mismatch", "matrix columns must equal point dimension");
  }
  const Curvature k = x.curvature();
  Coords mx(matrix.rows(), 0.0);
  for (std::size_t r = 0; r < matrix.rows(); ++r) {
    for (std::size_t c = 0; c < matrix.cols(); ++c) mx[r] += matrix(r, c) * x.coords()[c];
  }
  const double xn = x.norm();
  const double mxn = std::sqrt(norm2(mx));
  if (xn < kTiny || mxn < kTiny) return PoincarePoint(Coords(matrix.rows(), 0.0), k);
  const double mag = std::tanh(mxn / xn * std::atanh(k.sqrt_c() * xn)) / k.sqrt_c();
  return inside(scaled(mx, mag / mxn), k);
}

double activate(Activation act, double v) {
  switch (act) {
    case Activation::kIdentity: return v;
    case Activation::kTanh: return std::tanh(v);
    case Activation::kLeakyRelu: return v > 0.0 ? v : 0.01 * v;
  }
  return v;
}

PoincarePoint hyperbolic_activation(const PoincarePoint& x, Activation act) {
  Coords t = log0(x);
  for (double& v : t) v = activate(act, v);
  return exp0(t, x.curvature());
}

PoincarePoint hyperbolic_aggregate(std::span<const PoincarePoint> points, std::span<const double> weights) {
  if (points.empty()) throw Error("hyperbolic", "empty", "aggregate over no points");
  if (weights.size() != points.size()) throw Error("hyperbolic", "dimension_mismatch", "one weight per point required");
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) throw Error("hyperbolic", "bad_weight", "aggregation weights must be non-negative");
    total += w;
  }
  if (!(total > 0.0)) throw Error("hyperbolic", "bad_weight", "aggregation weights sum to zero");
  Coords acc(points.front().dim(), 0.0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    require_same(points.front(), points[i]);
    const Coords t = log0(points[i]);
    for (std::size_t d = 0; d < acc.size(); ++d) acc[d] += weights[i] * t[d];
  }
  return exp0(scaled(acc, 1.0 / total), points.front().curvature());
}

}  // namespace fgt2m::hyperbolic
