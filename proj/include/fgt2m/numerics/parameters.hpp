// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>
#include <vector>

#include "fgt2m/numerics/autodiff.hpp"
#include "fgt2m/numerics/random.hpp"

namespace fgt2m::numerics {

/// Named trainable arrays. Ordered by name so iteration (and serialization) is
/// deterministic.
class ParameterStore {
 public:
  void add(const std::string& name, Tensor value);
  void set(const std::string& name, Tensor value);
  const Tensor& get(const std::string& name) const;
  Tensor& mutable_get(const std::string& name);
  bool contains(const std::string& name) const { return params_.count(name) != 0; }
  std::size_t size() const { return params_.size(); }
  std::size_t scalar_count() const;
  std::vector<std::string> names() const;
  /// Parameters whose name starts with `prefix`.
  ParameterStore subset(const std::string& prefix) const;
  void merge(const ParameterStore& other);

  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::map<std::string, Tensor> params_;
};

/// Resolves parameter names to graph leaves for one forward pass. Asking for
/// the same name twice returns the same leaf, so fan-out accumulates.
class Binder {
 public:
  Binder(const ParameterStore& store, bool trainable) : store_(store), trainable_(trainable) {}

  Var operator()(const std::string& name);
  bool trainable() const { return trainable_; }
  const ParameterStore& store() const { return store_; }

  /// Gradient per bound parameter name.
  std::map<std::string, Tensor> collect(const Gradients& grads) const;

 private:
  const ParameterStore& store_;
  bool trainable_;
  std::map<std::string, Var> bound_;
};

Tensor xavier_uniform(Rng& rng, std::size_t fan_in, std::size_t fan_out);
Tensor normal_init(Rng& rng, const Shape& shape, double stddev);

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient-norm clip; <= 0 disables
};

class Adam {
 public:
  explicit Adam(AdamOptions options = {}) : options_(options) {}

  /// Applies one update; returns the pre-clip global gradient norm.
  double step(ParameterStore& store, const std::map<std::string, Tensor>& grads, double lr);
  long steps() const { return t_; }

 private:
  AdamOptions options_;
  long t_ = 0;
  std::map<std::string, Tensor> m_;
  std::map<std::string, Tensor> v_;
};

/// Cosine decay from lr_max to lr_min over total_steps, with optional linear warmup.
double cosine_lr(long step, long total_steps, double lr_max, double lr_min, long warmup = 0);

}  // namespace fgt2m::numerics
