// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::hyperbolic {

/// Points are kept inside c * |x|^2 < 1 - kBoundaryEps; anything that lands in
/// the shell between that radius and the true boundary is pulled back onto it.
inline constexpr double kBoundaryEps = 1e-5;

/// Positive curvature magnitude c of the ball of radius 1 / sqrt(c).
class Curvature {
 public:
  explicit Curvature(double c = 1.0);
  double c() const noexcept { return c_; }
  double sqrt_c() const noexcept { return sqrt_c_; }
  double radius() const noexcept { return 1.0 / sqrt_c_; }
  /// Largest norm a stored point may have.
  double max_norm() const noexcept;

  friend bool operator==(const Curvature&, const Curvature&) = default;

 private:
  double c_;
  double sqrt_c_;
};

using Coords = std::vector<double>;

class PoincarePoint {
 public:
  /// Rejects coordinates on or outside the boundary; coordinates inside the
  /// safety shell are re-projected.
  PoincarePoint(Coords coords, Curvature curvature);
  static PoincarePoint origin(std::size_t dim, Curvature curvature);

  const Coords& coords() const noexcept { return coords_; }
  const Curvature& curvature() const noexcept { return curvature_; }
  std::size_t dim() const noexcept { return coords_.size(); }
  double norm() const;

  /// lambda_x = 2 / (1 - c |x|^2)
  double conformal_factor() const;

 private:
  Coords coords_;
  Curvature curvature_;
};

struct TangentVector {
  Coords coords;
  PoincarePoint basepoint;
};

/// Rows re-projected onto the safety shell since process start (or last reset).
std::uint64_t projection_count();
void reset_projection_count();
void record_projections(std::uint64_t n);

PoincarePoint mobius_neg(const PoincarePoint& x);
PoincarePoint mobius_add(const PoincarePoint& x, const PoincarePoint& y);
PoincarePoint exp0(const Coords& v, Curvature curvature);
Coords log0(const PoincarePoint& y);
PoincarePoint exp_map(const TangentVector& v);
TangentVector log_map(const PoincarePoint& y, const PoincarePoint& basepoint);
double geodesic_distance(const PoincarePoint& x, const PoincarePoint& y);
/// M (rows x dim(x)) applied in the ball.
PoincarePoint mobius_matvec(const numerics::Tensor& matrix, const PoincarePoint& x);

enum class Activation { kIdentity, kTanh, kLeakyRelu };
double activate(Activation act, double v);

PoincarePoint hyperbolic_activation(const PoincarePoint& x, Activation act);
/// Weighted mean taken in the tangent space at the origin.
PoincarePoint hyperbolic_aggregate(std::span<const PoincarePoint> points, std::span<const double> weights);

}  // namespace fgt2m::hyperbolic
