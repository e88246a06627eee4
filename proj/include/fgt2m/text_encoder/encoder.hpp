// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fgt2m/hyperbolic/poincare.hpp"
#include "fgt2m/text_encoder/layers.hpp"
#include "fgt2m/text_encoder/vocabulary.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::text_encoder {

/// Which axis each softmax of the global-context attention normalizes.
/// kEfficient: keys over tokens, queries over channels. kSwapped: the reverse.
enum class ContextAxes { kEfficient, kSwapped };

struct HgcConfig {
  std::size_t layers = 2;
  hyperbolic::Curvature curvature{1.0};
  hyperbolic::Activation activation = hyperbolic::Activation::kTanh;
  text_graph::AdjacencyMode adjacency = text_graph::AdjacencyMode::kSymmetricSelfLoops;
};

struct TextEncoderConfig {
  std::size_t width = 64;
  std::size_t prompt_max = 32;
  std::size_t parsed_max = 96;
  std::size_t heads = 4;
  HgcConfig hgc;
  ContextAxes axes = ContextAxes::kEfficient;
  bool use_hgc = true;
  bool use_parsed = true;
};

/// Word and sentence features of both streams. W_l is the parsed stream, W_t
/// the prompt stream; masks mark real (non-pad) rows.
struct TextFeatures {
  Var W_l;
  Var W_t;
  Var S_l;
  Var S_t;
  std::vector<bool> mask_l;
  std::vector<bool> mask_t;
};

struct EmbeddedTokens {
  Var rows;
  std::vector<bool> mask;
};

/// Looks up `tokens` in the embedding matrix, truncating or right-padding with
/// <pad> to `length` (0 keeps the natural length). Pad rows are masked out.
EmbeddedTokens embed_tokens(const Var& table, const Vocabulary& vocab, const std::vector<std::string>& tokens,
                            std::size_t length = 0);

/// Row-normalized neighbourhood weights D^-1/2 (A) D^-1/2 for the configured
/// adjacency mode.
Tensor hgc_weights(const text_graph::DependencyGraph& g, text_graph::AdjacencyMode mode);

/// Stacked hyperbolic graph convolution. Rows enter the ball once through Exp0,
/// each layer applies Mobius matvec, Mobius bias, neighbourhood aggregation and
/// the activation, and Log0 returns the result to Euclidean space.
Var hgc_forward(Binder& p, const std::string& prefix, const Var& embedded, const text_graph::DependencyGraph& g,
                const HgcConfig& cfg);
void init_hgc(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width, std::size_t layers);

struct CrossPerception {
  Var W_l;
  Var W_t;
  Var context;
};

/// Global context over both streams, then residual query readout per stream.
CrossPerception cross_perception(Binder& p, const std::string& prefix, const Var& W_l, const Var& W_t,
                                 const std::vector<bool>& mask_l, const std::vector<bool>& mask_t,
                                 ContextAxes axes = ContextAxes::kEfficient);
void init_cross_perception(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width);

/// Parameters under "text." plus the "null." condition embeddings.
void init_text_encoder(ParameterStore& store, Rng& rng, const TextEncoderConfig& cfg, std::size_t vocab_size);

/// Full text branch for one prompt. `parsed` is the flattened 15-slot parse.
TextFeatures encode_text(Binder& p, const TextEncoderConfig& cfg, const Vocabulary& vocab,
                         const text_graph::DependencyGraph& g, const std::vector<std::string>& parsed);

/// The learned unconditional stand-in used when the condition is dropped.
TextFeatures null_features(Binder& p);

/// Vocabulary covering the template lexicon plus every token of `streams`.
Vocabulary build_vocabulary(const std::vector<std::vector<std::string>>& streams);

}  // namespace fgt2m::text_encoder
