// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fgt2m/diffusion/model.hpp"
#include "fgt2m/motion_data/corpus.hpp"

namespace fgt2m::diffusion {

struct TrainingItem {
  Tensor x0;  // normalized frames
  Condition condition;
};

/// Normalized clips of one split with their conditions.
std::vector<TrainingItem> training_items(const motion_data::Corpus& corpus, const std::string& split);

/// Vocabulary over the prompts and parsed streams of one split.
text_encoder::Vocabulary corpus_vocabulary(const motion_data::Corpus& corpus, const std::string& split);

struct TrainOptions {
  long steps = 3000;
  std::size_t batch = 16;
  double lr_max = 2e-4;
  double lr_min = 2e-5;
  long warmup = 0;
  double clip_norm = 1.0;
  std::uint64_t seed = 7;
};

struct TrainLogRow {
  long step;
  double loss;
  double lr;
  double grad_norm;
};

using StepCallback = std::function<void(const TrainLogRow&)>;

/// Minibatch Adam on the x0 objective with condition dropout. Deterministic in
/// (model parameters, items, options).
std::vector<TrainLogRow> train(Model& model, const std::vector<TrainingItem>& items, const TrainOptions& opts,
                               const StepCallback& on_step = {});

}  // namespace fgt2m::diffusion
