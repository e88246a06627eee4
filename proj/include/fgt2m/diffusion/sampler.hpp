// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <functional>

#include "fgt2m/diffusion/schedule.hpp"
#include "fgt2m/numerics/autodiff.hpp"
#include "fgt2m/numerics/random.hpp"

namespace fgt2m::diffusion {

using numerics::Var;

/// Clean-sequence prediction for x_t at step t, conditional or not.
using X0Predictor = std::function<Tensor(const Tensor& x_t, std::size_t t, bool conditional)>;

enum class BlendSpace { kEps, kX0 };

struct GuidanceConfig {
  double scale = 2.5;
  std::size_t steps = 0;  // 0: every step of the schedule
  BlendSpace space = BlendSpace::kEps;
};

/// s * cond + (1 - s) * uncond, elementwise.
Tensor blend(const Tensor& cond, const Tensor& uncond, double s);

/// Guided clean-sequence estimate at one step.
Tensor guided_x0(const DiffusionSchedule& sched, const X0Predictor& model, const Tensor& x_t, std::size_t t,
                 const GuidanceConfig& g);

/// Ancestral sampling from x_T ~ N(0, I). Deterministic in `seed`. Throws
/// diffusion/non_finite or diffusion/diverged naming the step.
Tensor sample(const X0Predictor& model, const GuidanceConfig& g, const DiffusionSchedule& sched, std::size_t frames,
              std::size_t dim, std::uint64_t seed);

/// Bound on |x_t| before the sampler gives up.
double divergence_bound(std::size_t frames, std::size_t dim);

/// One training draw: step, noise, and whether the condition is dropped.
struct NoiseDraw {
  std::size_t t;
  Tensor noise;
  bool drop_condition;
};
NoiseDraw draw_noise(numerics::Rng& rng, const DiffusionSchedule& sched, const numerics::Shape& shape,
                     double drop_probability = 0.1);

/// Mean squared error between predictions and x0 over every element of the batch.
/// `model(i, x_t, t, conditional)` returns the prediction for example i.
using BatchModel = std::function<Var(std::size_t i, const Var& x_t, std::size_t t, bool conditional)>;
Var training_loss(const std::vector<Tensor>& x0, const std::vector<NoiseDraw>& draws, const DiffusionSchedule& sched,
                  const BatchModel& model);

}  // namespace fgt2m::diffusion
