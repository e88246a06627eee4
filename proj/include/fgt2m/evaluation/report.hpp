// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>

#include "fgt2m/diffusion/model.hpp"
#include "fgt2m/evaluation/evaluator.hpp"
#include "fgt2m/evaluation/metrics.hpp"
#include "fgt2m/motion_data/corpus.hpp"

namespace fgt2m::evaluation {

struct EvalOptions {
  std::size_t repeats = 20;
  std::size_t diversity_group = 32;
  std::size_t mm_texts = 10;
  std::size_t mm_samples = 32;
  std::size_t mm_pairs = 16;
  diffusion::GuidanceConfig guidance{2.5, 50, diffusion::BlendSpace::kEps};
  std::uint64_t seed = 7;
  bool baselines = true;  // unconditioned generations and noise motions
};

using Progress = std::function<void(const std::string&)>;

/// The full metric suite on the test split. Every repeat draws fresh sampler
/// seeds and fresh retrieval pools. Metrics prefixed "gt_" use the real test
/// motions, "uncond_" the s = 0 generations, "noise_" Gaussian motions.
MetricReport run_evaluation(const diffusion::Model& model, const Evaluator& evaluator,
                            const motion_data::Corpus& corpus, const EvalOptions& opts,
                            const Progress& progress = {});

}  // namespace fgt2m::evaluation
