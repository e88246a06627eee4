// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/diffusion/trainer.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::diffusion {

using namespace numerics;

std::vector<TrainingItem> training_items(const motion_data::Corpus& corpus, const std::string& split) {
  std::vector<TrainingItem> items;
  for (std::size_t i : corpus.indices(split)) {
    const auto& e = corpus.manifest.entries[i];
    auto it = corpus.parses.find(e.parse_key);
    if (it == corpus.parses.end()) throw Error("diffusion", "missing_parse", "no parse for clip " + e.id);
    items.push_back({corpus.stats.apply(corpus.motions[i].frames), make_condition(e.prompt, it->second)});
  }
  return items;
}

text_encoder::Vocabulary corpus_vocabulary(const motion_data::Corpus& corpus, const std::string& split) {
  std::vector<std::vector<std::string>> streams;
  for (const auto& item : training_items(corpus, split)) {
    streams.push_back(item.condition.graph.surfaces());
    streams.push_back(text_encoder::parsed_stream_tokens(item.condition.parsed));
  }
  return text_encoder::build_vocabulary(streams);
}

std::vector<TrainLogRow> train(Model& model, const std::vector<TrainingItem>& items, const TrainOptions& opts,
                               const StepCallback& on_step) {
  if (items.empty()) throw Error("diffusion", "empty_corpus", "no training items");
  if (opts.steps <= 0 || opts.batch == 0) throw Error("diffusion", "bad_config", "steps and batch must be positive");
  const DiffusionSchedule sched = model.schedule();
  Rng rng(opts.seed);
  Adam adam(AdamOptions{0.9, 0.999, 1e-8, opts.clip_norm});
  std::vector<TrainLogRow> log;
  for (long step = 1; step <= opts.steps; ++step) {
    std::vector<const TrainingItem*> batch;
    std::vector<Tensor> x0;
    std::vector<NoiseDraw> draws;
    for (std::size_t b = 0; b < opts.batch; ++b) {
      batch.push_back(&items[rng.index(items.size())]);
      x0.push_back(batch.back()->x0);
      draws.push_back(draw_noise(rng, sched, batch.back()->x0.shape(), model.config.condition_drop));
    }
    Binder p(model.params, true);
    auto batch_model = [&](std::size_t i, const Var& x_t, std::size_t t, bool conditional) {
      if (!conditional) return model.predict_x0(p, x_t, t, nullptr);
      text_encoder::TextFeatures f = model.encode(p, batch[i]->condition);
      return model.predict_x0(p, x_t, t, &f);
    };
    Var loss = training_loss(x0, draws, sched, batch_model);
    if (!std::isfinite(loss.value().item()))
      throw Error("diffusion", "non_finite", "training loss became non-finite at step " + std::to_string(step));
    const double lr = cosine_lr(step - 1, opts.steps, opts.lr_max, opts.lr_min, opts.warmup);
    const double gnorm = adam.step(model.params, p.collect(backward(loss)), lr);
    TrainLogRow row{step, loss.value().item(), lr, gnorm};
    log.push_back(row);
    if (on_step) on_step(row);
  }
  return log;
}

}  // namespace fgt2m::diffusion
