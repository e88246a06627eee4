// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <span>
#include <unordered_map>
#include <vector>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::numerics {

class Var;

namespace detail {

struct Node;
using BackwardFn =
    std::function<void(const Node& self, const Tensor& grad, std::vector<Tensor>& parent_grads)>;

struct Node {
  Tensor value;
  std::vector<std::shared_ptr<Node>> parents;
  BackwardFn backward;
  bool requires_grad = false;
};

}  // namespace detail

/// Handle to a value in the computation graph. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<detail::Node> node) : node_(std::move(node)) {}

  const Tensor& value() const { return node_->value; }
  const Shape& shape() const { return node_->value.shape(); }
  std::size_t rows() const { return node_->value.rows(); }
  std::size_t cols() const { return node_->value.cols(); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  bool defined() const noexcept { return node_ != nullptr; }
  const detail::Node* node() const noexcept { return node_.get(); }
  const std::shared_ptr<detail::Node>& shared() const noexcept { return node_; }

 private:
  std::shared_ptr<detail::Node> node_;
};

/// Disables graph recording on this thread for the guard's lifetime.
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

bool grad_enabled() noexcept;

Var constant(Tensor value);
Var leaf(Tensor value, bool requires_grad = true);

// Elementwise binary ops broadcast numpy-style over the matrix view.
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var mul(const Var& a, const Var& b);
Var div(const Var& a, const Var& b);

Var matmul(const Var& a, const Var& b);
Var transpose(const Var& x);
Var concat(const std::vector<Var>& parts, int axis);
Var slice(const Var& x, int axis, std::size_t begin, std::size_t end);
Var broadcast_to(const Var& x, const Shape& shape);
Var gather_rows(const Var& table, std::span<const std::size_t> indices);

Var sum(const Var& x);
Var sum(const Var& x, int axis);
Var mean(const Var& x);
Var mean(const Var& x, int axis);
/// L2 norm along an axis, keeping the reduced dimension. The gradient at a zero
/// vector is taken as zero.
Var norm(const Var& x, int axis);

Var neg(const Var& x);
Var scale(const Var& x, double factor);
Var add_scalar(const Var& x, double value);
Var square(const Var& x);
Var sqrt(const Var& x);
Var exp(const Var& x);
Var log(const Var& x);
Var tanh(const Var& x);
Var artanh(const Var& x);
Var sigmoid(const Var& x);
Var relu(const Var& x);
Var leaky_relu(const Var& x, double slope);
Var clamp_min(const Var& x, double lo);
Var softmax(const Var& x, int axis);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(const Var& a, const Var& b) { return mul(a, b); }
inline Var operator/(const Var& a, const Var& b) { return div(a, b); }
inline Var operator-(const Var& x) { return neg(x); }
inline Var operator*(const Var& x, double f) { return scale(x, f); }
inline Var operator*(double f, const Var& x) { return scale(x, f); }

/// The op kinds the generic dispatcher understands.
enum class OpKind {
  kAdd,
  kSub,
  kMul,
  kMatmul,
  kTranspose,
  kConcat,
  kSlice,
  kSum,
  kMean,
  kTanh,
  kArtanh,
  kSigmoid,
  kSoftmax,
  kNorm,
  kSqrt,
  kExp,
  kLog,
  kBroadcast,
};

struct OpOptions {
  int axis = -1;  // -1 means "all elements" for sum/mean
  std::size_t begin = 0;
  std::size_t end = 0;
  Shape shape;  // target of kBroadcast
};

const char* op_name(OpKind kind);
Var apply(OpKind kind, const std::vector<Var>& operands, const OpOptions& options = {});

/// Gradients of one backward pass, keyed by graph node. The graph itself is
/// left untouched.
class Gradients {
 public:
  /// Zero tensor of the right shape when the variable received no gradient.
  Tensor of(const Var& v) const;
  bool contains(const Var& v) const { return grads_.count(v.node()) != 0; }

 private:
  friend Gradients backward(const Var& loss);
  std::unordered_map<const detail::Node*, Tensor> grads_;
};

Gradients backward(const Var& loss);

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h per coordinate.
Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x,
                            double h = 1e-5);

/// Richardson-extrapolated central differences (4 D(h/2) - D(h)) / 3; error
/// O(h^4), which allows a larger h and so less cancellation.
Tensor richardson_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h = 1e-3);

/// max_i |a_i - b_i| / max(|a_i|, |b_i|, floor).
double max_relative_error(const Tensor& a, const Tensor& b, double floor = 1e-8);

}  // namespace fgt2m::numerics
