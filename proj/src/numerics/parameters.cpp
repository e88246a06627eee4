// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/numerics/parameters.hpp"

#include <cmath>
#include <numbers>

#include "fgt2m/common/error.hpp"

namespace fgt2m::numerics {

void ParameterStore::add(const std::string& name, Tensor value) {
  if (!params_.emplace(name, std::move(value)).second) {
    throw Error("numerics", "duplicate_parameter", "parameter registered twice: " + name);
  }
}

void ParameterStore::set(const std::string& name, Tensor value) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("numerics", "unknown_parameter", "no parameter named " + name);
  if (it->second.shape() != value.shape()) {
    throw Error("numerics", "shape", "parameter " + name + " expects " + shape_string(it->second.shape()) + ", got " +
                                         shape_string(value.shape()));
  }
  it->second = std::move(value);
}

const Tensor& ParameterStore::get(const std::string& name) const {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("numerics", "unknown_parameter", "no parameter named " + name);
  return it->second;
}

Tensor& ParameterStore::mutable_get(const std::string& name) {
  auto it = params_.find(name);
  if (it == params_.end()) throw Error("numerics", "unknown_parameter", "no parameter named " + name);
  return it->second;
}

std::size_t ParameterStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : params_) n += t.size();
  return n;
}

std::vector<std::string> ParameterStore::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : params_) out.push_back(name);
  return out;
}

ParameterStore ParameterStore::subset(const std::string& prefix) const {
  ParameterStore out;
  for (const auto& [name, t] : params_) {
    if (name.rfind(prefix, 0) == 0) out.add(name, t);
  }
  return out;
}

void ParameterStore::merge(const ParameterStore& other) {
  for (const auto& [name, t] : other) add(name, t);
}

Var Binder::operator()(const std::string& name) {
  auto it = bound_.find(name);
  if (it != bound_.end()) return it->second;
  Var v = leaf(store_.get(name), trainable_);
  bound_.emplace(name, v);
  return v;
}

std::map<std::string, Tensor> Binder::collect(const Gradients& grads) const {
  std::map<std::string, Tensor> out;
  for (const auto& [name, v] : bound_) out.emplace(name, grads.of(v));
  return out;
}

Tensor xavier_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensor t({fan_in, fan_out});
  for (double& v : t.data()) v = rng.uniform(-limit, limit);
  return t;
}

Tensor normal_init(Rng& rng, const Shape& shape, double stddev) {
  Tensor t(shape);
  for (double& v : t.data()) v = stddev * rng.normal();
  return t;
}

double Adam::step(ParameterStore& store, const std::map<std::string, Tensor>& grads, double lr) {
  ++t_;
  double sq = 0.0;
  for (const auto& [_, g] : grads) {
    for (double v : g.data()) sq += v * v;
  }
  const double gnorm = std::sqrt(sq);
  const double clip = (options_.clip_norm > 0.0 && gnorm > options_.clip_norm) ? options_.clip_norm / gnorm : 1.0;
  const double bc1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (const auto& [name, g] : grads) {
    Tensor& p = store.mutable_get(name);
    auto [mit, _m] = m_.try_emplace(name, Tensor(p.shape()));
    auto [vit, _v] = v_.try_emplace(name, Tensor(p.shape()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < p.size(); ++i) {
      const double gi = g[i] * clip;
      m[i] = options_.beta1 * m[i] + (1.0 - options_.beta1) * gi;
      v[i] = options_.beta2 * v[i] + (1.0 - options_.beta2) * gi * gi;
      p[i] -= lr * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + options_.eps);
    }
  }
  return gnorm;
}

double cosine_lr(long step, long total_steps, double lr_max, double lr_min, long warmup) {
  if (warmup > 0 && step < warmup) return lr_max * static_cast<double>(step + 1) / static_cast<double>(warmup);
  const double span = static_cast<double>(std::max(1L, total_steps - warmup));
  const double progress = std::min(1.0, static_cast<double>(step - warmup) / span);
  return lr_min + 0.5 * (lr_max - lr_min) * (1.0 + std::cos(std::numbers::pi * progress));
}

}  // namespace fgt2m::numerics
