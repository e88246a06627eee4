// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/fusion_denoiser/fusion.hpp"

#include "fgt2m/common/error.hpp"

namespace fgt2m::fusion_denoiser {

using namespace numerics;

Var sentence_fusion(const Var& x, const Var& s_l, const Var& s_p, const Var& lambda_l, const Var& lambda_p) {
  if (s_l.cols() != x.cols() || s_p.cols() != x.cols())
    throw Error("fusion_denoiser", "shape", "sentence features must match the motion width");
  Var gate_l = sigmoid(matmul(x, transpose(s_l)));
  Var gate_p = sigmoid(matmul(x, transpose(s_p)));
  Var out = add(x, mul(clamp_min(lambda_l, 0.0), mul(x, gate_l)));
  return add(out, mul(clamp_min(lambda_p, 0.0), mul(x, gate_p)));
}

namespace {

// Rows [words; reference] or words with the reference appended to each row.
Var join_reference(const Var& words, const Var& reference, ReferenceJoin join) {
  if (join == ReferenceJoin::kTokens) return concat({words, reference}, 0);
  return concat({words, broadcast_to(reference, {words.rows(), reference.cols()})}, 1);
}

std::vector<bool> join_mask(const std::vector<bool>& mask, ReferenceJoin join) {
  std::vector<bool> out(mask);
  if (join == ReferenceJoin::kTokens) out.push_back(true);
  return out;
}

}  // namespace

Var word_fusion(Binder& p, const std::string& prefix, const Var& x, const TextFeatures& text, ReferenceJoin join,
                ContextAxes axes) {
  const std::size_t w = x.cols();
  if (text.W_l.cols() != w || text.W_t.cols() != w)
    throw Error("fusion_denoiser", "shape", "word features must match the motion width");
  if (text.mask_l.size() != text.W_l.rows() || text.mask_t.size() != text.W_t.rows())
    throw Error("fusion_denoiser", "shape", "word mask length does not match the stream");
  Var r_l = matmul(text.S_l, p(prefix + ".m_l"));
  Var r_t = matmul(text.S_t, p(prefix + ".m_t"));
  Var lt = join_reference(text.W_l, r_t, join);
  Var tl = join_reference(text.W_t, r_l, join);
  auto project = [&](const char* m, const char* l, const char* t) {
    return concat({matmul(x, p(prefix + m)), matmul(lt, p(prefix + l)), matmul(tl, p(prefix + t))}, 0);
  };
  Var value = project(".v_m", ".v_l", ".v_t");
  Var key = project(".k_m", ".k_l", ".k_t");
  std::vector<bool> mask(x.rows(), true);
  for (bool m : join_mask(text.mask_l, join)) mask.push_back(m);
  for (bool m : join_mask(text.mask_t, join)) mask.push_back(m);
  Var query = matmul(x, p(prefix + ".q_m"));
  if (axes == ContextAxes::kEfficient) {
    Var templ = matmul(transpose(softmax(add(key, constant(text_encoder::token_bias(mask))), 0)), value);
    return matmul(softmax(query, 1), templ);
  }
  Tensor keep({mask.size(), 1}, 0.0);
  for (std::size_t i = 0; i < mask.size(); ++i) keep(i, 0) = mask[i] ? 1.0 : 0.0;
  Var templ = matmul(transpose(mul(softmax(key, 1), constant(keep))), value);
  return matmul(softmax(query, 0), templ);
}

void init_word_fusion(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width,
                      ReferenceJoin join) {
  const std::size_t text_in = join == ReferenceJoin::kTokens ? width : 2 * width;
  store.add(prefix + ".m_l", xavier_uniform(rng, width, width));
  store.add(prefix + ".m_t", xavier_uniform(rng, width, width));
  for (const char* m : {".v_m", ".k_m", ".q_m"}) store.add(prefix + m, xavier_uniform(rng, width, width));
  for (const char* m : {".v_l", ".v_t", ".k_l", ".k_t"}) store.add(prefix + m, xavier_uniform(rng, text_in, width));
}

}  // namespace fgt2m::fusion_denoiser
