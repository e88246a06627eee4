// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/diffusion/schedule.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::diffusion {

DiffusionSchedule make_schedule(std::size_t T, double beta_min, double beta_max) {
  if (T < 2) throw Error("diffusion", "bad_schedule", "need at least 2 steps, got " + std::to_string(T));
  if (!(beta_min > 0.0 && beta_min < beta_max && beta_max < 1.0))
    throw Error("diffusion", "bad_schedule", "need 0 < beta_min < beta_max < 1");
  DiffusionSchedule s;
  s.T = T;
  s.beta.assign(T + 1, 0.0);
  s.alpha.assign(T + 1, 1.0);
  s.alpha_bar.assign(T + 1, 1.0);
  s.posterior_variance.assign(T + 1, 0.0);
  for (std::size_t t = 1; t <= T; ++t) {
    s.beta[t] = beta_min + static_cast<double>(t - 1) / static_cast<double>(T - 1) * (beta_max - beta_min);
    s.alpha[t] = 1.0 - s.beta[t];
    s.alpha_bar[t] = s.alpha_bar[t - 1] * s.alpha[t];
    s.posterior_variance[t] = s.beta[t] * (1.0 - s.alpha_bar[t - 1]) / (1.0 - s.alpha_bar[t]);
  }
  return s;
}

namespace {

void check_step(const DiffusionSchedule& s, std::size_t t) {
  if (t < 1 || t > s.T)
    throw Error("diffusion", "bad_step", "step " + std::to_string(t) + " outside [1, " + std::to_string(s.T) + "]");
}

}  // namespace

Tensor q_sample(const DiffusionSchedule& s, const Tensor& x0, std::size_t t, const Tensor& noise) {
  check_step(s, t);
  if (x0.shape() != noise.shape()) throw Error("diffusion", "shape", "noise shape differs from x0");
  const double a = std::sqrt(s.alpha_bar[t]), b = std::sqrt(1.0 - s.alpha_bar[t]);
  Tensor out(x0.shape());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = a * x0[i] + b * noise[i];
  return out;
}

Tensor eps_from_x0(const DiffusionSchedule& s, const Tensor& x_t, std::size_t t, const Tensor& x0) {
  check_step(s, t);
  const double a = std::sqrt(s.alpha_bar[t]), b = std::sqrt(1.0 - s.alpha_bar[t]);
  Tensor out(x_t.shape());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - a * x0[i]) / b;
  return out;
}

Tensor x0_from_eps(const DiffusionSchedule& s, const Tensor& x_t, std::size_t t, const Tensor& eps) {
  check_step(s, t);
  const double a = std::sqrt(s.alpha_bar[t]), b = std::sqrt(1.0 - s.alpha_bar[t]);
  Tensor out(x_t.shape());
  for (std::size_t i = 0; i < x_t.size(); ++i) out[i] = (x_t[i] - b * eps[i]) / a;
  return out;
}

std::vector<std::size_t> sampling_steps(const DiffusionSchedule& s, std::size_t count) {
  if (count == 0 || count >= s.T) count = s.T;
  std::vector<std::size_t> steps;
  for (std::size_t i = 1; i <= count; ++i) {
    // Evenly spaced in [1, T] with both ends included.
    const double pos = count == 1 ? static_cast<double>(s.T)
                                  : 1.0 + static_cast<double>(i - 1) * static_cast<double>(s.T - 1) /
                                              static_cast<double>(count - 1);
    steps.push_back(static_cast<std::size_t>(std::llround(pos)));
  }
  return steps;
}

PosteriorStep posterior(const DiffusionSchedule& s, std::size_t t, std::size_t prev) {
  check_step(s, t);
  if (prev >= t) throw Error("diffusion", "bad_step", "previous step must precede t");
  const double ab_t = s.alpha_bar[t], ab_prev = s.alpha_bar[prev];
  const double beta = 1.0 - ab_t / ab_prev;
  PosteriorStep out;
  out.coef_x0 = std::sqrt(ab_prev) * beta / (1.0 - ab_t);
  out.coef_xt = std::sqrt(1.0 - beta) * (1.0 - ab_prev) / (1.0 - ab_t);
  out.variance = beta * (1.0 - ab_prev) / (1.0 - ab_t);
  return out;
}

}  // namespace fgt2m::diffusion
