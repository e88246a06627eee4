// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/diffusion/sampler.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::diffusion {

using namespace numerics;

Tensor blend(const Tensor& cond, const Tensor& uncond, double s) {
  if (cond.shape() != uncond.shape()) throw Error("diffusion", "shape", "guidance branches differ in shape");
  Tensor out(cond.shape());
  for (std::size_t i = 0; i < cond.size(); ++i) out[i] = s * cond[i] + (1.0 - s) * uncond[i];
  return out;
}

Tensor guided_x0(const DiffusionSchedule& sched, const X0Predictor& model, const Tensor& x_t, std::size_t t,
                 const GuidanceConfig& g) {
  if (g.scale < 0.0) throw Error("diffusion", "bad_guidance", "guidance scale must be non-negative");
  // The unused branch has weight exactly zero; skip evaluating it.
  if (g.scale == 1.0) return model(x_t, t, true);
  if (g.scale == 0.0) return model(x_t, t, false);
  Tensor c = model(x_t, t, true);
  Tensor u = model(x_t, t, false);
  if (g.space == BlendSpace::kX0) return blend(c, u, g.scale);
  Tensor eps = blend(eps_from_x0(sched, x_t, t, c), eps_from_x0(sched, x_t, t, u), g.scale);
  return x0_from_eps(sched, x_t, t, eps);
}

double divergence_bound(std::size_t frames, std::size_t dim) {
  return 10.0 * std::sqrt(static_cast<double>(frames * dim));
}

Tensor sample(const X0Predictor& model, const GuidanceConfig& g, const DiffusionSchedule& sched, std::size_t frames,
              std::size_t dim, std::uint64_t seed) {
  Rng rng(seed);
  Tensor x = rng.normal_tensor({frames, dim});
  const auto steps = sampling_steps(sched, g.steps);
  const double bound = divergence_bound(frames, dim);
  for (std::size_t i = steps.size(); i-- > 0;) {
    const std::size_t t = steps[i];
    const std::size_t prev = i == 0 ? 0 : steps[i - 1];
    Tensor x0 = guided_x0(sched, model, x, t, g);
    const PosteriorStep post = posterior(sched, t, prev);
    const double sigma = std::sqrt(post.variance);
    Tensor z = prev == 0 ? Tensor(x.shape(), 0.0) : rng.normal_tensor(x.shape());
    double norm2 = 0.0;
    for (std::size_t k = 0; k < x.size(); ++k) {
      x[k] = post.coef_x0 * x0[k] + post.coef_xt * x[k] + sigma * z[k];
      norm2 += x[k] * x[k];
    }
    if (!x.all_finite()) throw Error("diffusion", "non_finite", "sampler state became non-finite at step " + std::to_string(t));
    if (std::sqrt(norm2) > bound)
      throw Error("diffusion", "diverged", "sampler state norm exceeded " + std::to_string(bound) + " at step " +
                                               std::to_string(t));
  }
  return x;
}

NoiseDraw draw_noise(Rng& rng, const DiffusionSchedule& sched, const Shape& shape, double drop_probability) {
  NoiseDraw d;
  d.t = 1 + rng.index(sched.T);
  d.noise = rng.normal_tensor(shape);
  d.drop_condition = rng.bernoulli(drop_probability);
  return d;
}

Var training_loss(const std::vector<Tensor>& x0, const std::vector<NoiseDraw>& draws, const DiffusionSchedule& sched,
                  const BatchModel& model) {
  if (x0.empty() || x0.size() != draws.size())
    throw Error("diffusion", "shape", "training batch needs one noise draw per example");
  std::size_t count = 0;
  Var total;
  for (std::size_t i = 0; i < x0.size(); ++i) {
    Tensor xt = q_sample(sched, x0[i], draws[i].t, draws[i].noise);
    Var pred = model(i, constant(xt), draws[i].t, !draws[i].drop_condition);
    if (pred.shape() != x0[i].shape()) throw Error("diffusion", "shape", "prediction shape differs from x0");
    Var err = sum(square(sub(pred, constant(x0[i]))));
    total = total.defined() ? add(total, err) : err;
    count += x0[i].size();
  }
  return scale(total, 1.0 / static_cast<double>(count));
}

}  // namespace fgt2m::diffusion
