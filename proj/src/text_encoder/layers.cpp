// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_encoder/layers.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::text_encoder {

using namespace numerics;

Tensor key_bias(const std::vector<bool>& mask) {
  Tensor b({1, mask.size()}, 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (!mask[i]) b(0, i) = kMaskedLogit;
  return b;
}

Tensor token_bias(const std::vector<bool>& mask) { return key_bias(mask).reshaped({mask.size(), 1}); }

Var silu(const Var& x) { return mul(x, sigmoid(x)); }

Var linear(Binder& p, const std::string& prefix, const Var& x) {
  return add(matmul(x, p(prefix + ".w")), p(prefix + ".b"));
}

Var layer_norm(Binder& p, const std::string& prefix, const Var& x, double eps) {
  Var centered = sub(x, mean(x, 1));
  Var var = mean(square(centered), 1);
  Var normed = div(centered, sqrt(add_scalar(var, eps)));
  return add(mul(normed, p(prefix + ".g")), p(prefix + ".b"));
}

Var masked_mean(const Var& x, const std::vector<bool>& mask) {
  if (mask.size() != x.rows()) throw Error("text_encoder", "shape", "mask length does not match rows");
  std::size_t kept = 0;
  for (bool m : mask) kept += m;
  Tensor w({1, mask.size()}, 0.0);
  if (kept == 0) return matmul(constant(w), x);
  for (std::size_t i = 0; i < mask.size(); ++i)
    if (mask[i]) w(0, i) = 1.0 / static_cast<double>(kept);
  return matmul(constant(w), x);
}

void init_linear(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t in, std::size_t out) {
  store.add(prefix + ".w", xavier_uniform(rng, in, out));
  store.add(prefix + ".b", Tensor({1, out}, 0.0));
}

void init_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t width) {
  store.add(prefix + ".g", Tensor({1, width}, 1.0));
  store.add(prefix + ".b", Tensor({1, width}, 0.0));
}

Var self_attention(Binder& p, const std::string& prefix, const Var& x, const std::vector<bool>& mask,
                   std::size_t heads) {
  const std::size_t width = x.cols();
  if (heads == 0 || width % heads != 0)
    throw Error("text_encoder", "shape", "width " + std::to_string(width) + " not divisible by heads");
  if (mask.size() != x.rows()) throw Error("text_encoder", "shape", "mask length does not match tokens");
  const std::size_t dh = width / heads;
  Var q = matmul(x, p(prefix + ".wq"));
  Var k = matmul(x, p(prefix + ".wk"));
  Var v = matmul(x, p(prefix + ".wv"));
  Var bias = constant(key_bias(mask));
  const double scale_factor = 1.0 / std::sqrt(static_cast<double>(dh));
  std::vector<Var> outs;
  for (std::size_t h = 0; h < heads; ++h) {
    Var qh = slice(q, 1, h * dh, (h + 1) * dh);
    Var kh = slice(k, 1, h * dh, (h + 1) * dh);
    Var vh = slice(v, 1, h * dh, (h + 1) * dh);
    Var scores = add(scale(matmul(qh, transpose(kh)), scale_factor), bias);
    outs.push_back(matmul(softmax(scores, 1), vh));
  }
  Var merged = heads == 1 ? outs.front() : concat(outs, 1);
  return matmul(merged, p(prefix + ".wo"));
}

void init_self_attention(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width) {
  for (const char* m : {".wq", ".wk", ".wv", ".wo"}) store.add(prefix + m, xavier_uniform(rng, width, width));
}

Var transformer_layer(Binder& p, const std::string& prefix, const Var& x, const std::vector<bool>& mask,
                      std::size_t heads) {
  Var h = add(x, self_attention(p, prefix + ".attn", layer_norm(p, prefix + ".ln1", x), mask, heads));
  Var m = linear(p, prefix + ".mlp2", silu(linear(p, prefix + ".mlp1", layer_norm(p, prefix + ".ln2", h))));
  return add(h, m);
}

void init_transformer_layer(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width) {
  init_layer_norm(store, prefix + ".ln1", width);
  init_self_attention(store, rng, prefix + ".attn", width);
  init_layer_norm(store, prefix + ".ln2", width);
  init_linear(store, rng, prefix + ".mlp1", width, 4 * width);
  init_linear(store, rng, prefix + ".mlp2", 4 * width, width);
}

}  // namespace fgt2m::text_encoder
