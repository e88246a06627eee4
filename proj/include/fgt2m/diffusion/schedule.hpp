// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <vector>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::diffusion {

using numerics::Tensor;

/// Linear beta schedule. Tables are indexed by step t in [1, T]; index 0 holds
/// the t = 0 convention (alpha_bar = 1, beta = 0).
struct DiffusionSchedule {
  std::size_t T = 0;
  std::vector<double> beta;
  std::vector<double> alpha;
  std::vector<double> alpha_bar;
  std::vector<double> posterior_variance;
};

DiffusionSchedule make_schedule(std::size_t T = 1000, double beta_min = 1e-4, double beta_max = 2e-2);

/// sqrt(alpha_bar_t) x0 + sqrt(1 - alpha_bar_t) noise.
Tensor q_sample(const DiffusionSchedule& s, const Tensor& x0, std::size_t t, const Tensor& noise);

/// Noise implied by a clean-sequence estimate, and back.
Tensor eps_from_x0(const DiffusionSchedule& s, const Tensor& x_t, std::size_t t, const Tensor& x0);
Tensor x0_from_eps(const DiffusionSchedule& s, const Tensor& x_t, std::size_t t, const Tensor& eps);

/// Steps visited by the sampler, ascending, always ending at T. `count` = T (or
/// 0) gives every step; fewer gives evenly strided steps.
std::vector<std::size_t> sampling_steps(const DiffusionSchedule& s, std::size_t count);

/// Posterior q(x_prev | x_t, x0) between two visited steps (prev = 0 at the end).
struct PosteriorStep {
  double coef_x0;
  double coef_xt;
  double variance;
};
PosteriorStep posterior(const DiffusionSchedule& s, std::size_t t, std::size_t prev);

}  // namespace fgt2m::diffusion
