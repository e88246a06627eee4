// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/diffusion/sampler.hpp"
#include "fgt2m/fusion_denoiser/denoiser.hpp"
#include "fgt2m/motion_data/motion.hpp"
#include "fgt2m/numerics/checkpoint.hpp"
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::diffusion {

struct ModelConfig {
  text_encoder::TextEncoderConfig text;
  fusion_denoiser::DenoiserConfig denoiser;
  std::size_t T = 1000;
  double beta_min = 1e-4;
  double beta_max = 2e-2;
  double condition_drop = 0.1;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
};

/// Everything the text branch needs for one prompt.
struct Condition {
  std::string prompt;
  text_graph::DependencyGraph graph;
  std::vector<std::string> parsed;  // 15 flattened slots
};

/// Graph from the template grammar plus the given parse.
Condition make_condition(const std::string& prompt, const semantic_parsing::ParsedPrompt& parse);

struct Model {
  ModelConfig config;
  text_encoder::Vocabulary vocab;
  motion_data::NormStats stats;
  numerics::ParameterStore params;

  static Model create(const ModelConfig& config, text_encoder::Vocabulary vocab, motion_data::NormStats stats,
                      std::uint64_t seed);

  DiffusionSchedule schedule() const;

  /// Graph-building forward for training.
  Var predict_x0(numerics::Binder& p, const Var& x_t, std::size_t t, const text_encoder::TextFeatures* cond) const;
  text_encoder::TextFeatures encode(numerics::Binder& p, const Condition& c) const;

  /// Inference predictor with the text features computed once.
  X0Predictor predictor(const Condition& c) const;

  /// Samples one normalized sequence and maps it back to motion units.
  motion_data::MotionSequence generate(const Condition& c, const GuidanceConfig& g, std::uint64_t seed,
                                       std::size_t frames, double fps = 20.0) const;

  numerics::Checkpoint to_checkpoint(const nlohmann::json& extra = nlohmann::json::object()) const;
  static Model from_checkpoint(const numerics::Checkpoint& ck);
};

/// Joint count implied by a pose width (4 + 12 J).
std::size_t joints_for_dim(std::size_t dim);

}  // namespace fgt2m::diffusion
