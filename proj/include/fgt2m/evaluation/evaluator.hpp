// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fgt2m/motion_data/motion.hpp"
#include "fgt2m/numerics/checkpoint.hpp"
#include "fgt2m/text_encoder/vocabulary.hpp"

namespace fgt2m::evaluation {

using numerics::Tensor;
using numerics::Var;

struct EvaluatorConfig {
  std::size_t embed = 8;
  std::size_t width = 64;
  std::size_t hidden = 128;
  std::size_t max_tokens = 32;
  std::size_t chunks = 8;  // temporal averaging windows of the motion encoder
  std::size_t motion_dim = 64;
  double temperature = 0.1;

  nlohmann::json to_json() const;
  static EvaluatorConfig from_json(const nlohmann::json& j);
};

/// Contrastive text/motion encoders into a shared unit-norm space. Motions are
/// given in raw units and normalized with `stats` internally.
struct Evaluator {
  EvaluatorConfig config;
  text_encoder::Vocabulary vocab;
  motion_data::NormStats stats;
  numerics::ParameterStore params;

  static Evaluator create(const EvaluatorConfig& config, text_encoder::Vocabulary vocab, motion_data::NormStats stats,
                          std::uint64_t seed);

  /// B x embed, one unit row per prompt.
  Var text_embeddings(numerics::Binder& p, const std::vector<std::string>& prompts) const;
  /// B x embed from normalized frame matrices, before projection onto the
  /// unit sphere.
  Var motion_features(numerics::Binder& p, const std::vector<Tensor>& normalized) const;
  /// Unit rows of motion_features.
  Var motion_embeddings(numerics::Binder& p, const std::vector<Tensor>& normalized) const;

  Tensor embed_texts(const std::vector<std::string>& prompts) const;
  Tensor embed_motions(const std::vector<motion_data::MotionSequence>& motions) const;
  /// Both motion spaces from one forward pass.
  struct MotionCodes {
    Tensor features;
    Tensor embeddings;
  };
  MotionCodes encode_motions(const std::vector<motion_data::MotionSequence>& motions) const;

  numerics::Checkpoint to_checkpoint() const;
  static Evaluator from_checkpoint(const numerics::Checkpoint& ck);
};

/// Chunk means of a frame matrix, flattened to one row of chunks x D.
Tensor chunk_features(const Tensor& frames, std::size_t chunks);

/// Symmetric InfoNCE over a batch whose i-th text matches the i-th motion.
Var info_nce(const Var& text, const Var& motion, double temperature);

struct EvaluatorTrainOptions {
  long steps = 1500;
  std::size_t batch = 64;
  double lr = 2e-3;
  std::uint64_t seed = 11;
};

/// Batches hold distinct prompts so no false negatives appear. Returns the loss
/// per step.
std::vector<double> train_evaluator(Evaluator& ev, const std::vector<std::string>& prompts,
                                    const std::vector<motion_data::MotionSequence>& motions,
                                    const EvaluatorTrainOptions& opts);

}  // namespace fgt2m::evaluation
