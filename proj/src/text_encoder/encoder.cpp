// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_encoder/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "fgt2m/common/error.hpp"
#include "fgt2m/hyperbolic/ops.hpp"
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::text_encoder {

using namespace numerics;
namespace hr = hyperbolic::rows;

EmbeddedTokens embed_tokens(const Var& table, const Vocabulary& vocab, const std::vector<std::string>& tokens,
                            std::size_t length) {
  if (table.rows() != vocab.size())
    throw Error("text_encoder", "shape",
                "embedding table has " + std::to_string(table.rows()) + " rows for " +
                    std::to_string(vocab.size()) + " tokens");
  const std::size_t n = length == 0 ? tokens.size() : length;
  if (n == 0) throw Error("text_encoder", "empty", "no tokens to embed");
  std::vector<std::size_t> ids(n, vocab.pad());
  std::vector<bool> mask(n, false);
  for (std::size_t i = 0; i < std::min(n, tokens.size()); ++i) {
    ids[i] = vocab.index(tokens[i]);
    mask[i] = true;
  }
  return {gather_rows(table, ids), std::move(mask)};
}

Tensor hgc_weights(const text_graph::DependencyGraph& g, text_graph::AdjacencyMode mode) {
  Tensor a = text_graph::adjacency(g, mode);
  const std::size_t n = a.rows();
  std::vector<double> deg(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) deg[i] += a(i, j);
  Tensor w({n, n}, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (a(i, j) != 0.0) w(i, j) = a(i, j) / std::sqrt(deg[i] * deg[j]);
  // A node with no neighbours keeps itself.
  for (std::size_t i = 0; i < n; ++i)
    if (deg[i] == 0.0) w(i, i) = 1.0;
  return w;
}

Var hgc_forward(Binder& p, const std::string& prefix, const Var& embedded, const text_graph::DependencyGraph& g,
                const HgcConfig& cfg) {
  if (embedded.rows() != g.size())
    throw Error("text_encoder", "shape",
                "hgc input has " + std::to_string(embedded.rows()) + " rows for a " + std::to_string(g.size()) +
                    "-node graph");
  if (cfg.layers == 0) throw Error("text_encoder", "bad_config", "hgc needs at least one layer");
  const Tensor weights = hgc_weights(g, cfg.adjacency);
  const auto& k = cfg.curvature;
  Var h = hr::exp0(embedded, k);
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    const std::string name = prefix + "." + std::to_string(i);
    Var w = p(name + ".weight");
    if (w.rows() != w.cols() || w.rows() != embedded.cols())
      throw Error("text_encoder", "shape", name + ".weight must be square with the embedding width");
    h = hr::mobius_matvec(h, w, k);
    h = hr::mobius_add(h, hr::exp0(p(name + ".bias"), k), k);
    h = hr::aggregate(h, weights, k);
    h = hr::activation(h, cfg.activation, k);
  }
  return hr::log0(h, k);
}

void init_hgc(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width, std::size_t layers) {
  for (std::size_t i = 0; i < layers; ++i) {
    const std::string name = prefix + "." + std::to_string(i);
    store.add(name + ".weight", xavier_uniform(rng, width, width));
    store.add(name + ".bias", Tensor({1, width}, 0.0));
  }
}

namespace {

std::vector<bool> joined(const std::vector<bool>& a, const std::vector<bool>& b) {
  std::vector<bool> out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

CrossPerception cross_perception(Binder& p, const std::string& prefix, const Var& W_l, const Var& W_t,
                                 const std::vector<bool>& mask_l, const std::vector<bool>& mask_t,
                                 ContextAxes axes) {
  if (W_l.cols() != W_t.cols()) throw Error("text_encoder", "shape", "streams must share a width");
  if (mask_l.size() != W_l.rows() || mask_t.size() != W_t.rows())
    throw Error("text_encoder", "shape", "mask length does not match stream length");
  Var x = concat({W_l, W_t}, 0);
  Var keys = matmul(x, p(prefix + ".k"));
  Var values = matmul(x, p(prefix + ".v"));
  Var tok_bias = constant(token_bias(joined(mask_l, mask_t)));
  Var context;
  auto readout = [&](const Var& w, const std::string& q) {
    Var query = matmul(w, p(prefix + "." + q));
    Var attn = axes == ContextAxes::kEfficient ? softmax(query, 1) : softmax(query, 0);
    return add(w, matmul(attn, context));
  };
  if (axes == ContextAxes::kEfficient) {
    context = matmul(transpose(softmax(add(keys, tok_bias), 0)), values);
  } else {
    // Padding rows get zero weight once their channel-normalized keys are zeroed.
    Tensor keep({x.rows(), 1}, 0.0);
    auto m = joined(mask_l, mask_t);
    for (std::size_t i = 0; i < m.size(); ++i) keep(i, 0) = m[i] ? 1.0 : 0.0;
    context = matmul(transpose(mul(softmax(keys, 1), constant(keep))), values);
  }
  return {readout(W_l, "ql"), readout(W_t, "qt"), context};
}

void init_cross_perception(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width) {
  for (const char* m : {".k", ".v", ".ql", ".qt"}) store.add(prefix + m, xavier_uniform(rng, width, width));
}

void init_text_encoder(ParameterStore& store, Rng& rng, const TextEncoderConfig& cfg, std::size_t vocab_size) {
  const std::size_t w = cfg.width;
  store.add("text.embed", normal_init(rng, {vocab_size, w}, 1.0 / std::sqrt(static_cast<double>(w))));
  store.add("text.pos_prompt", normal_init(rng, {cfg.prompt_max, w}, 0.02));
  store.add("text.pos_parsed", normal_init(rng, {cfg.parsed_max, w}, 0.02));
  init_hgc(store, rng, "text.hgc", w, cfg.hgc.layers);
  init_transformer_layer(store, rng, "text.tf_prompt", w);
  init_transformer_layer(store, rng, "text.tf_parsed", w);
  init_cross_perception(store, rng, "text.cross", w);
  store.add("null.W_l", normal_init(rng, {1, w}, 0.02));
  store.add("null.W_t", normal_init(rng, {1, w}, 0.02));
  store.add("null.S_l", normal_init(rng, {1, w}, 0.02));
  store.add("null.S_t", normal_init(rng, {1, w}, 0.02));
}

namespace {

Var with_positions(Binder& p, const std::string& name, const Var& rows) {
  Var pos = p(name);
  if (rows.rows() > pos.rows())
    throw Error("text_encoder", "too_long",
                std::to_string(rows.rows()) + " tokens exceed the " + std::to_string(pos.rows()) + " positions of " +
                    name);
  return add(rows, slice(pos, 0, 0, rows.rows()));
}

}  // namespace

TextFeatures encode_text(Binder& p, const TextEncoderConfig& cfg, const Vocabulary& vocab,
                         const text_graph::DependencyGraph& g, const std::vector<std::string>& parsed) {
  Var table = p("text.embed");
  if (g.size() > cfg.prompt_max)
    throw Error("text_encoder", "too_long",
                "prompt has " + std::to_string(g.size()) + " tokens, limit " + std::to_string(cfg.prompt_max));
  EmbeddedTokens prompt = embed_tokens(table, vocab, g.surfaces());
  Var wt = with_positions(p, "text.pos_prompt", prompt.rows);
  if (cfg.use_hgc) wt = hgc_forward(p, "text.hgc", wt, g, cfg.hgc);
  wt = transformer_layer(p, "text.tf_prompt", wt, prompt.mask, cfg.heads);

  auto stream = parsed_stream_tokens(parsed, cfg.parsed_max);
  EmbeddedTokens parsed_rows = embed_tokens(table, vocab, stream);
  Var wl = with_positions(p, "text.pos_parsed", parsed_rows.rows);
  wl = transformer_layer(p, "text.tf_parsed", wl, parsed_rows.mask, cfg.heads);
  if (!cfg.use_parsed) {
    wl = constant(Tensor({1, cfg.width}, 0.0));
    parsed_rows.mask = {false};
  }

  TextFeatures out;
  CrossPerception cp = cross_perception(p, "text.cross", wl, wt, parsed_rows.mask, prompt.mask, cfg.axes);
  out.W_l = cp.W_l;
  out.W_t = cp.W_t;
  out.mask_l = parsed_rows.mask;
  out.mask_t = prompt.mask;
  out.S_l = masked_mean(out.W_l, out.mask_l);
  out.S_t = masked_mean(out.W_t, out.mask_t);
  return out;
}

TextFeatures null_features(Binder& p) {
  return {p("null.W_l"), p("null.W_t"), p("null.S_l"), p("null.S_t"), {true}, {true}};
}

Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& streams) {
  Vocabulary v(text_graph::template_lexicon().words());
  v.add(".");
  for (std::string_view k : semantic_parsing::kActionKeys) v.add(slot_marker(k));
  for (std::string_view k : semantic_parsing::kSemanticKeys) v.add(slot_marker(k));
  std::vector<std::string> rest;
  for (const auto& s : streams) rest.insert(rest.end(), s.begin(), s.end());
  std::sort(rest.begin(), rest.end());
  for (const auto& w : rest) v.add(w);
  return v;
}

}  // namespace fgt2m::text_encoder
