// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/numerics/autodiff.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_set>

#include "fgt2m/common/error.hpp"

namespace fgt2m::numerics {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

thread_local bool g_grad_enabled = true;

[[noreturn]] void shape_error(const std::string& op, const std::string& what) {
  throw Error("numerics", "shape", op + ": " + what);
}

void check_finite(const Tensor& t, const char* op) {
  if (!t.all_finite()) {
    throw Error("numerics", "non_finite", std::string(op) + " produced a non-finite value");
  }
}

Var make_result(Tensor value, std::vector<Var> parents, detail::BackwardFn fn, const char* op) {
  check_finite(value, op);
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  bool needs = false;
  if (g_grad_enabled) {
    for (const Var& p : parents) needs = needs || p.requires_grad();
  }
  if (needs) {
    node->requires_grad = true;
    node->parents.reserve(parents.size());
    for (const Var& p : parents) node->parents.push_back(p.shared());
    node->backward = std::move(fn);
  }
  return Var(std::move(node));
}

bool wants(const detail::Node& self, std::size_t i) { return self.parents[i]->requires_grad; }

// Axis in the 2D matrix view. Rank-1 tensors only have axis 0, which runs
// along the columns of the 1 x n view.
int view_axis(const Tensor& t, int axis, const char* op) {
  if (t.rank() == 1) {
    if (axis != 0) shape_error(op, "rank-1 tensor only has axis 0");
    return 1;
  }
  if (axis != 0 && axis != 1) shape_error(op, "axis must be 0 or 1");
  return axis;
}

Shape reduced_shape(const Tensor& t, int vaxis) {
  if (t.rank() == 1) return {1};
  return vaxis == 0 ? Shape{1, t.cols()} : Shape{t.rows(), 1};
}

struct Broadcast {
  std::size_t rows;
  std::size_t cols;
  Shape shape;
};

Broadcast broadcast_shapes(const Tensor& a, const Tensor& b, const char* op) {
  auto dim = [&](std::size_t x, std::size_t y) {
    if (x != y && x != 1 && y != 1) {
      shape_error(op, "cannot broadcast " + shape_string(a.shape()) + " with " + shape_string(b.shape()));
    }
    return std::max(x, y);
  };
  Broadcast out;
  out.rows = dim(a.rows(), b.rows());
  out.cols = dim(a.cols(), b.cols());
  if (std::max(a.rank(), b.rank()) == 1) {
    out.shape = {out.cols};
  } else {
    out.shape = {out.rows, out.cols};
  }
  return out;
}

// Elementwise binary op with broadcasting. `da`/`db` give the local partial
// derivatives from (x, y, out).
template <typename F, typename DA, typename DB>
Var binary(const Var& a, const Var& b, const char* op, F f, DA da, DB db) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  Broadcast bc = broadcast_shapes(av, bv, op);
  Tensor out(bc.shape);
  const std::size_t ar = av.rows() == 1 ? 0 : 1, ac = av.cols() == 1 ? 0 : 1;
  const std::size_t br = bv.rows() == 1 ? 0 : 1, bcs = bv.cols() == 1 ? 0 : 1;
  for (std::size_t r = 0; r < bc.rows; ++r) {
    for (std::size_t c = 0; c < bc.cols; ++c) {
      out[r * bc.cols + c] = f(av(r * ar, c * ac), bv(r * br, c * bcs));
    }
  }
  auto fn = [=](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& x = self.parents[0]->value;
    const Tensor& y = self.parents[1]->value;
    const Tensor& o = self.value;
    const bool wa = wants(self, 0), wb = wants(self, 1);
    if (wa) pg[0] = Tensor(x.shape());
    if (wb) pg[1] = Tensor(y.shape());
    for (std::size_t r = 0; r < bc.rows; ++r) {
      for (std::size_t c = 0; c < bc.cols; ++c) {
        const std::size_t k = r * bc.cols + c;
        const double xv = x(r * ar, c * ac), yv = y(r * br, c * bcs);
        if (wa) pg[0](r * ar, c * ac) += g[k] * da(xv, yv, o[k]);
        if (wb) pg[1](r * br, c * bcs) += g[k] * db(xv, yv, o[k]);
      }
    }
  };
  return make_result(std::move(out), {a, b}, fn, op);
}

template <typename F, typename DF>
Var unary(const Var& x, const char* op, F f, DF df) {
  const Tensor& xv = x.value();
  Tensor out(xv.shape());
  for (std::size_t i = 0; i < xv.size(); ++i) out[i] = f(xv[i]);
  auto fn = [=](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& in = self.parents[0]->value;
    Tensor gx(in.shape());
    for (std::size_t i = 0; i < in.size(); ++i) gx[i] = g[i] * df(in[i], self.value[i]);
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, op);
}

// Sum of g over the dimensions that were broadcast to reach g's shape.
Tensor reduce_to(const Tensor& g, const Tensor& like) {
  Tensor out(like.shape());
  const std::size_t lr = like.rows() == 1 ? 0 : 1, lc = like.cols() == 1 ? 0 : 1;
  for (std::size_t r = 0; r < g.rows(); ++r) {
    for (std::size_t c = 0; c < g.cols(); ++c) out(r * lr, c * lc) += g(r, c);
  }
  return out;
}

}  // namespace

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }
bool grad_enabled() noexcept { return g_grad_enabled; }

Var constant(Tensor value) { return leaf(std::move(value), false); }

Var leaf(Tensor value, bool requires_grad) {
  check_finite(value, "leaf");
  auto node = std::make_shared<detail::Node>();
  node->value = std::move(value);
  node->requires_grad = requires_grad;
  return Var(std::move(node));
}

Var add(const Var& a, const Var& b) {
  return binary(
      a, b, "add", [](double x, double y) { return x + y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return 1.0; });
}

Var sub(const Var& a, const Var& b) {
  return binary(
      a, b, "sub", [](double x, double y) { return x - y; }, [](double, double, double) { return 1.0; },
      [](double, double, double) { return -1.0; });
}

Var mul(const Var& a, const Var& b) {
  return binary(
      a, b, "mul", [](double x, double y) { return x * y; }, [](double, double y, double) { return y; },
      [](double x, double, double) { return x; });
}

Var div(const Var& a, const Var& b) {
  return binary(
      a, b, "div", [](double x, double y) { return x / y; }, [](double, double y, double) { return 1.0 / y; },
      [](double x, double y, double) { return -x / (y * y); });
}

Var matmul(const Var& a, const Var& b) {
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.cols() != bv.rows()) {
    shape_error("matmul", shape_string(av.shape()) + " x " + shape_string(bv.shape()));
  }
  Tensor out({av.rows(), bv.cols()});
  MutMap(out.data().data(), av.rows(), bv.cols()).noalias() =
      ConstMap(av.data().data(), av.rows(), av.cols()) * ConstMap(bv.data().data(), bv.rows(), bv.cols());
  auto fn = [](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& x = self.parents[0]->value;
    const Tensor& y = self.parents[1]->value;
    ConstMap gm(g.data().data(), g.rows(), g.cols());
    if (wants(self, 0)) {
      Tensor gx(x.shape());
      MutMap(gx.data().data(), x.rows(), x.cols()).noalias() =
          gm * ConstMap(y.data().data(), y.rows(), y.cols()).transpose();
      pg[0] = std::move(gx);
    }
    if (wants(self, 1)) {
      Tensor gy(y.shape());
      MutMap(gy.data().data(), y.rows(), y.cols()).noalias() =
          ConstMap(x.data().data(), x.rows(), x.cols()).transpose() * gm;
      pg[1] = std::move(gy);
    }
  };
  return make_result(std::move(out), {a, b}, fn, "matmul");
}

Var transpose(const Var& x) {
  const Tensor& xv = x.value();
  Tensor out({xv.cols(), xv.rows()});
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out(c, r) = xv(r, c);
  }
  auto fn = [](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& in = self.parents[0]->value;
    Tensor gx(in.shape());
    for (std::size_t r = 0; r < in.rows(); ++r) {
      for (std::size_t c = 0; c < in.cols(); ++c) gx(r, c) = g(c, r);
    }
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, "transpose");
}

Var concat(const std::vector<Var>& parts, int axis) {
  if (parts.empty()) shape_error("concat", "no operands");
  const Tensor& first = parts.front().value();
  const int va = view_axis(first, axis, "concat");
  std::size_t rows = first.rows(), cols = first.cols();
  std::size_t total = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    if (t.rank() != first.rank()) shape_error("concat", "rank mismatch");
    if (va == 0 && t.cols() != cols) shape_error("concat", "column mismatch");
    if (va == 1 && t.rows() != rows) shape_error("concat", "row mismatch");
    total += va == 0 ? t.rows() : t.cols();
  }
  Shape shape = first.rank() == 1 ? Shape{total} : (va == 0 ? Shape{total, cols} : Shape{rows, total});
  Tensor out(shape);
  std::vector<std::size_t> offsets;
  std::size_t off = 0;
  for (const Var& p : parts) {
    const Tensor& t = p.value();
    offsets.push_back(off);
    for (std::size_t r = 0; r < t.rows(); ++r) {
      for (std::size_t c = 0; c < t.cols(); ++c) {
        if (va == 0) {
          out(off + r, c) = t(r, c);
        } else {
          out(r, off + c) = t(r, c);
        }
      }
    }
    off += va == 0 ? t.rows() : t.cols();
  }
  auto fn = [va, offsets](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    for (std::size_t i = 0; i < self.parents.size(); ++i) {
      if (!wants(self, i)) continue;
      const Tensor& t = self.parents[i]->value;
      Tensor gi(t.shape());
      for (std::size_t r = 0; r < t.rows(); ++r) {
        for (std::size_t c = 0; c < t.cols(); ++c) {
          gi(r, c) = va == 0 ? g(offsets[i] + r, c) : g(r, offsets[i] + c);
        }
      }
      pg[i] = std::move(gi);
    }
  };
  return make_result(std::move(out), parts, fn, "concat");
}

Var slice(const Var& x, int axis, std::size_t begin, std::size_t end) {
  const Tensor& xv = x.value();
  const int va = view_axis(xv, axis, "slice");
  const std::size_t extent = va == 0 ? xv.rows() : xv.cols();
  if (begin >= end || end > extent) {
    shape_error("slice", "range [" + std::to_string(begin) + "," + std::to_string(end) + ") out of extent " +
                             std::to_string(extent));
  }
  const std::size_t n = end - begin;
  Shape shape = xv.rank() == 1 ? Shape{n} : (va == 0 ? Shape{n, xv.cols()} : Shape{xv.rows(), n});
  Tensor out(shape);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = va == 0 ? xv(begin + r, c) : xv(r, begin + c);
  }
  auto fn = [va, begin](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    Tensor gx(self.parents[0]->value.shape());
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < g.cols(); ++c) {
        if (va == 0) {
          gx(begin + r, c) = g(r, c);
        } else {
          gx(r, begin + c) = g(r, c);
        }
      }
    }
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, "slice");
}

Var broadcast_to(const Var& x, const Shape& shape) {
  const Tensor& xv = x.value();
  Tensor target(shape);
  Broadcast bc = broadcast_shapes(xv, target, "broadcast");
  if (bc.shape != shape) shape_error("broadcast", "cannot broadcast " + shape_string(xv.shape()) + " to " + shape_string(shape));
  const std::size_t xr = xv.rows() == 1 ? 0 : 1, xc = xv.cols() == 1 ? 0 : 1;
  for (std::size_t r = 0; r < target.rows(); ++r) {
    for (std::size_t c = 0; c < target.cols(); ++c) target(r, c) = xv(r * xr, c * xc);
  }
  auto fn = [](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    pg[0] = reduce_to(g, self.parents[0]->value);
  };
  return make_result(std::move(target), {x}, fn, "broadcast");
}

Var gather_rows(const Var& table, std::span<const std::size_t> indices) {
  const Tensor& tv = table.value();
  if (tv.rank() != 2) shape_error("gather_rows", "table must be rank 2");
  if (indices.empty()) shape_error("gather_rows", "no indices");
  Tensor out({indices.size(), tv.cols()});
  for (std::size_t i = 0; i < indices.size(); ++i) {
    if (indices[i] >= tv.rows()) shape_error("gather_rows", "index out of range");
    for (std::size_t c = 0; c < tv.cols(); ++c) out(i, c) = tv(indices[i], c);
  }
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  auto fn = [idx](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    Tensor gt(self.parents[0]->value.shape());
    for (std::size_t i = 0; i < idx.size(); ++i) {
      for (std::size_t c = 0; c < g.cols(); ++c) gt(idx[i], c) += g(i, c);
    }
    pg[0] = std::move(gt);
  };
  return make_result(std::move(out), {table}, fn, "gather_rows");
}

Var sum(const Var& x) {
  const Tensor& xv = x.value();
  double s = 0.0;
  for (double v : xv.data()) s += v;
  auto fn = [](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    pg[0] = Tensor(self.parents[0]->value.shape(), g[0]);
  };
  return make_result(Tensor::scalar(s), {x}, fn, "sum");
}

Var sum(const Var& x, int axis) {
  const Tensor& xv = x.value();
  const int va = view_axis(xv, axis, "sum");
  Tensor out(reduced_shape(xv, va));
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out[va == 0 ? c : r] += xv(r, c);
  }
  auto fn = [va](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& in = self.parents[0]->value;
    Tensor gx(in.shape());
    for (std::size_t r = 0; r < in.rows(); ++r) {
      for (std::size_t c = 0; c < in.cols(); ++c) gx(r, c) = g[va == 0 ? c : r];
    }
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, "sum");
}

Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

Var mean(const Var& x, int axis) {
  const Tensor& xv = x.value();
  const int va = view_axis(xv, axis, "mean");
  const double n = static_cast<double>(va == 0 ? xv.rows() : xv.cols());
  return scale(sum(x, axis), 1.0 / n);
}

Var norm(const Var& x, int axis) {
  const Tensor& xv = x.value();
  const int va = view_axis(xv, axis, "norm");
  Tensor out(reduced_shape(xv, va));
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t c = 0; c < xv.cols(); ++c) out[va == 0 ? c : r] += xv(r, c) * xv(r, c);
  }
  for (double& v : out.data()) v = std::sqrt(v);
  auto fn = [va](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& in = self.parents[0]->value;
    Tensor gx(in.shape());
    for (std::size_t r = 0; r < in.rows(); ++r) {
      for (std::size_t c = 0; c < in.cols(); ++c) {
        const std::size_t k = va == 0 ? c : r;
        const double n = self.value[k];
        gx(r, c) = n > 0.0 ? g[k] * in(r, c) / n : 0.0;
      }
    }
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, "norm");
}

Var neg(const Var& x) {
  return unary(
      x, "neg", [](double v) { return -v; }, [](double, double) { return -1.0; });
}

Var scale(const Var& x, double factor) {
  return unary(
      x, "scale", [factor](double v) { return v * factor; }, [factor](double, double) { return factor; });
}

Var add_scalar(const Var& x, double value) {
  return unary(
      x, "add_scalar", [value](double v) { return v + value; }, [](double, double) { return 1.0; });
}

Var square(const Var& x) {
  return unary(
      x, "square", [](double v) { return v * v; }, [](double v, double) { return 2.0 * v; });
}

Var sqrt(const Var& x) {
  for (double v : x.value().data()) {
    if (v < 0.0) throw Error("numerics", "domain", "sqrt of negative value");
  }
  return unary(
      x, "sqrt", [](double v) { return std::sqrt(v); }, [](double, double y) { return 0.5 / y; });
}

Var exp(const Var& x) {
  return unary(
      x, "exp", [](double v) { return std::exp(v); }, [](double, double y) { return y; });
}

Var log(const Var& x) {
  for (double v : x.value().data()) {
    if (!(v > 0.0)) throw Error("numerics", "domain", "log of non-positive value");
  }
  return unary(
      x, "log", [](double v) { return std::log(v); }, [](double v, double) { return 1.0 / v; });
}

Var tanh(const Var& x) {
  return unary(
      x, "tanh", [](double v) { return std::tanh(v); }, [](double, double y) { return 1.0 - y * y; });
}

Var artanh(const Var& x) {
  for (double v : x.value().data()) {
    if (!(std::abs(v) < 1.0)) throw Error("numerics", "domain", "artanh argument outside (-1, 1)");
  }
  return unary(
      x, "artanh", [](double v) { return std::atanh(v); }, [](double v, double) { return 1.0 / (1.0 - v * v); });
}

Var sigmoid(const Var& x) {
  return unary(
      x, "sigmoid",
      [](double v) { return v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v)); },
      [](double, double y) { return y * (1.0 - y); });
}

Var relu(const Var& x) { return leaky_relu(x, 0.0); }

Var leaky_relu(const Var& x, double slope) {
  return unary(
      x, "leaky_relu", [slope](double v) { return v > 0.0 ? v : slope * v; },
      [slope](double v, double) { return v > 0.0 ? 1.0 : slope; });
}

Var clamp_min(const Var& x, double lo) {
  return unary(
      x, "clamp_min", [lo](double v) { return v > lo ? v : lo; },
      [lo](double v, double) { return v > lo ? 1.0 : 0.0; });
}

Var softmax(const Var& x, int axis) {
  const Tensor& xv = x.value();
  const int va = view_axis(xv, axis, "softmax");
  Tensor out(xv.shape());
  const std::size_t outer = va == 0 ? xv.cols() : xv.rows();
  const std::size_t inner = va == 0 ? xv.rows() : xv.cols();
  auto at = [&](Tensor& t, std::size_t o, std::size_t i) -> double& { return va == 0 ? t(i, o) : t(o, i); };
  auto cat = [&](const Tensor& t, std::size_t o, std::size_t i) { return va == 0 ? t(i, o) : t(o, i); };
  for (std::size_t o = 0; o < outer; ++o) {
    double m = cat(xv, o, 0);
    for (std::size_t i = 1; i < inner; ++i) m = std::max(m, cat(xv, o, i));
    double z = 0.0;
    for (std::size_t i = 0; i < inner; ++i) {
      double e = std::exp(cat(xv, o, i) - m);
      at(out, o, i) = e;
      z += e;
    }
    for (std::size_t i = 0; i < inner; ++i) at(out, o, i) /= z;
  }
  auto fn = [va, outer, inner](const detail::Node& self, const Tensor& g, std::vector<Tensor>& pg) {
    const Tensor& y = self.value;
    Tensor gx(y.shape());
    auto idx = [&](std::size_t o, std::size_t i) { return va == 0 ? i * y.cols() + o : o * y.cols() + i; };
    for (std::size_t o = 0; o < outer; ++o) {
      double dot = 0.0;
      for (std::size_t i = 0; i < inner; ++i) dot += g[idx(o, i)] * y[idx(o, i)];
      for (std::size_t i = 0; i < inner; ++i) gx[idx(o, i)] = y[idx(o, i)] * (g[idx(o, i)] - dot);
    }
    pg[0] = std::move(gx);
  };
  return make_result(std::move(out), {x}, fn, "softmax");
}

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kConcat: return "concat";
    case OpKind::kSlice: return "slice";
    case OpKind::kSum: return "sum";
    case OpKind::kMean: return "mean";
    case OpKind::kTanh: return "tanh";
    case OpKind::kArtanh: return "artanh";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kSoftmax: return "softmax";
    case OpKind::kNorm: return "norm";
    case OpKind::kSqrt: return "sqrt";
    case OpKind::kExp: return "exp";
    case OpKind::kLog: return "log";
    case OpKind::kBroadcast: return "broadcast";
  }
  return "unknown";
}

Var apply(OpKind kind, const std::vector<Var>& operands, const OpOptions& options) {
  auto need = [&](std::size_t n) {
    if (operands.size() != n) {
      shape_error(op_name(kind), "expected " + std::to_string(n) + " operands, got " + std::to_string(operands.size()));
    }
  };
  switch (kind) {
    case OpKind::kAdd: need(2); return add(operands[0], operands[1]);
    case OpKind::kSub: need(2); return sub(operands[0], operands[1]);
    case OpKind::kMul: need(2); return mul(operands[0], operands[1]);
    case OpKind::kMatmul: need(2); return matmul(operands[0], operands[1]);
    case OpKind::kTranspose: need(1); return transpose(operands[0]);
    case OpKind::kConcat: return concat(operands, options.axis < 0 ? 0 : options.axis);
    case OpKind::kSlice: need(1); return slice(operands[0], options.axis < 0 ? 0 : options.axis, options.begin, options.end);
    case OpKind::kSum: need(1); return options.axis < 0 ? sum(operands[0]) : sum(operands[0], options.axis);
    case OpKind::kMean: need(1); return options.axis < 0 ? mean(operands[0]) : mean(operands[0], options.axis);
    case OpKind::kTanh: need(1); return tanh(operands[0]);
    case OpKind::kArtanh: need(1); return artanh(operands[0]);
    case OpKind::kSigmoid: need(1); return sigmoid(operands[0]);
    case OpKind::kSoftmax: need(1); return softmax(operands[0], options.axis < 0 ? 0 : options.axis);
    case OpKind::kNorm: need(1); return norm(operands[0], options.axis < 0 ? 0 : options.axis);
    case OpKind::kSqrt: need(1); return sqrt(operands[0]);
    case OpKind::kExp: need(1); return exp(operands[0]);
    case OpKind::kLog: need(1); return log(operands[0]);
    case OpKind::kBroadcast: need(1); return broadcast_to(operands[0], options.shape);
  }
  shape_error("apply", "unknown op kind");
}

Tensor Gradients::of(const Var& v) const {
  auto it = grads_.find(v.node());
  if (it == grads_.end()) return Tensor(v.shape());
  return it->second;
}

Gradients backward(const Var& loss) {
  if (loss.value().size() != 1) {
    throw Error("numerics", "non_scalar", "backward needs a scalar loss, got " + shape_string(loss.shape()));
  }
  Gradients result;
  if (!loss.requires_grad()) return result;

  // Iterative post-order DFS gives a topological order.
  std::vector<const detail::Node*> order;
  std::unordered_set<const detail::Node*> seen;
  std::vector<std::pair<const detail::Node*, std::size_t>> stack{{loss.node(), 0}};
  seen.insert(loss.node());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      const detail::Node* p = node->parents[next++].get();
      if (p->requires_grad && seen.insert(p).second) stack.push_back({p, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  auto& grads = result.grads_;
  grads[loss.node()] = Tensor(loss.shape(), 1.0);
  std::vector<Tensor> parent_grads;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const detail::Node* node = *it;
    if (!node->backward) continue;
    auto found = grads.find(node);
    if (found == grads.end()) continue;
    parent_grads.assign(node->parents.size(), Tensor());
    node->backward(*node, found->second, parent_grads);
    for (std::size_t i = 0; i < node->parents.size(); ++i) {
      Tensor& pg = parent_grads[i];
      if (pg.empty()) continue;
      check_finite(pg, "backward");
      const detail::Node* p = node->parents[i].get();
      auto [slot, inserted] = grads.try_emplace(p, std::move(pg));
      if (!inserted) {
        for (std::size_t k = 0; k < slot->second.size(); ++k) slot->second[k] += pg[k];
      }
    }
    // Interior gradients are no longer needed once propagated.
    grads.erase(node);
  }
  return result;
}

Tensor finite_diff_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor grad(x.shape());
  Tensor probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double up = f(probe);
    probe[i] = orig - h;
    const double down = f(probe);
    probe[i] = orig;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw Error("numerics", "non_finite", "finite difference probe returned a non-finite value");
    }
    grad[i] = (up - down) / (2.0 * h);
  }
  return grad;
}

Tensor richardson_gradient(const std::function<double(const Tensor&)>& f, const Tensor& x, double h) {
  Tensor coarse = finite_diff_gradient(f, x, h);
  Tensor fine = finite_diff_gradient(f, x, h / 2);
  Tensor out(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (4.0 * fine[i] - coarse[i]) / 3.0;
  return out;
}

double max_relative_error(const Tensor& a, const Tensor& b, double floor) {
  if (a.size() != b.size()) throw Error("numerics", "shape", "max_relative_error size mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::abs(a[i]), std::abs(b[i]), floor});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace fgt2m::numerics
