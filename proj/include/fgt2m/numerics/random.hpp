// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::numerics {

/// Versioned, platform-stable random source.
///
/// Version 1: std::mt19937_64 (whose output sequence is fixed by the C++
/// standard); uniforms take the top 53 bits; normals use the Box-Muller
/// transform and consume two uniforms per pair. The standard library
/// distributions are implementation-defined and are deliberately not used.
class Rng {
 public:
  static constexpr int kVersion = 1;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  std::size_t index(std::size_t n);
  bool bernoulli(double p) { return uniform() < p; }
  Tensor normal_tensor(const Shape& shape);

  /// Child seed for an independent stream (splitmix64 of seed and stream id).
  static std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace fgt2m::numerics
