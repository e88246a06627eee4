// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgt2m/diffusion/model.hpp"
#include "fgt2m/diffusion/trainer.hpp"
#include "fgt2m/evaluation/evaluator.hpp"
#include "fgt2m/evaluation/report.hpp"
#include "fgt2m/motion_data/corpus.hpp"
#include "fgt2m/semantic_parsing/llm_client.hpp"

namespace fgt2m::cli {

/// One INI file with sections [model] [diffusion] [data] [parsing] [training]
/// [eval]. Key reference: docs/config.md.
struct Config {
  struct Model {
    std::size_t width = 64;
    std::size_t blocks = 2;
    std::size_t heads = 4;
    std::size_t hgc_layers = 2;
    double curvature = 1.0;
    std::size_t prompt_max = 32;
    std::size_t parsed_max = 96;
    std::size_t max_frames = 64;
    bool use_hgc = true;
    bool use_parsed = true;

    friend bool operator==(const Model&, const Model&) = default;
  } model;
  struct Diffusion {
    std::size_t steps = 1000;
    double beta_min = 1e-4;
    double beta_max = 2e-2;
    double condition_drop = 0.1;
    double guidance = 2.5;
    std::size_t sampling_steps = 50;

    friend bool operator==(const Diffusion&, const Diffusion&) = default;
  } diffusion;
  struct Data {
    std::size_t joints = 5;
    std::size_t frames = 40;
    std::size_t clips = 512;
    std::uint64_t seed = 7;
    double fps = 20.0;
    double test_fraction = 0.125;
    std::string corpus_dir = "corpus";

    friend bool operator==(const Data&, const Data&) = default;
  } data;
  struct Parsing {
    std::string fixtures;  // empty: no fixture table
    bool llm = false;
    std::string llm_base_url;
    std::string llm_model;
    std::string llm_key_env = "FGT2M_LLM_API_KEY";
    double llm_timeout = 30.0;

    friend bool operator==(const Parsing&, const Parsing&) = default;
  } parsing;
  struct Training {
    double lr_max = 2e-4;
    double lr_min = 2e-5;
    long warmup = 0;
    std::size_t batch = 16;
    long steps = 3000;
    double clip = 1.0;
    std::uint64_t seed = 7;
    long checkpoint_every = 1000;
    std::string run_dir = "runs/toy";

    friend bool operator==(const Training&, const Training&) = default;
  } training;
  struct Eval {
    std::size_t repeats = 20;
    std::size_t diversity_group = 32;
    std::size_t mm_texts = 10;
    std::size_t mm_samples = 32;
    std::size_t mm_pairs = 16;
    std::uint64_t seed = 7;
    bool baselines = true;
    std::size_t evaluator_embed = 8;
    long evaluator_steps = 1500;
    std::size_t evaluator_batch = 64;
    double evaluator_lr = 2e-3;
    std::uint64_t evaluator_seed = 11;

    friend bool operator==(const Eval&, const Eval&) = default;
  } eval;

  /// Parses INI text. Relative paths resolve against `base_dir`. Unknown
  /// sections or keys, malformed values and missing paths are errors.
  static Config parse(const std::string& text, const std::string& base_dir = ".");
  static Config load(const std::string& path);
  std::string dump() const;

  /// Applies "section.key=value" overrides in order.
  void apply_overrides(const std::vector<std::string>& assignments, const std::string& base_dir = ".");
  /// Checks referenced paths and cross-field constraints.
  void validate() const;

  /// SHA-256 over the keys that determine a trained checkpoint (everything
  /// except paths, inference and evaluation settings).
  std::string hash() const;

  diffusion::ModelConfig model_config(std::size_t motion_dim) const;
  motion_data::CorpusOptions corpus_options() const;
  diffusion::TrainOptions train_options() const;
  diffusion::GuidanceConfig guidance(double scale) const;
  evaluation::EvalOptions eval_options() const;
  evaluation::EvaluatorTrainOptions evaluator_options() const;
  semantic_parsing::LlmEndpointConfig llm_config() const;

  friend bool operator==(const Config&, const Config&) = default;
};

}  // namespace fgt2m::cli
