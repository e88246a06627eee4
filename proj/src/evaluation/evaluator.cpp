// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/evaluation/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "fgt2m/common/error.hpp"
#include "fgt2m/text_encoder/layers.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::evaluation {

using namespace numerics;
using nlohmann::json;
namespace te = text_encoder;

json EvaluatorConfig::to_json() const {
  return {{"embed", embed},           {"width", width},   {"hidden", hidden},         {"max_tokens", max_tokens},
          {"chunks", chunks},         {"motion_dim", motion_dim}, {"temperature", temperature}};
}

EvaluatorConfig EvaluatorConfig::from_json(const json& j) {
  EvaluatorConfig c;
  try {
    c.embed = j.at("embed").get<std::size_t>();
    c.width = j.at("width").get<std::size_t>();
    c.hidden = j.at("hidden").get<std::size_t>();
    c.max_tokens = j.at("max_tokens").get<std::size_t>();
    c.chunks = j.at("chunks").get<std::size_t>();
    c.motion_dim = j.at("motion_dim").get<std::size_t>();
    c.temperature = j.at("temperature").get<double>();
  } catch (const json::exception& e) {
    throw Error("evaluation", "bad_config", std::string("evaluator config: ") + e.what());
  }
  return c;
}

Evaluator Evaluator::create(const EvaluatorConfig& config, te::Vocabulary vocab, motion_data::NormStats stats,
                            std::uint64_t seed) {
  if (stats.mean.size() != config.motion_dim)
    throw Error("evaluation", "bad_config", "normalization stats do not match motion_dim");
  Evaluator ev{config, std::move(vocab), std::move(stats), {}};
  Rng rng(seed);
  const std::size_t w = config.width;
  ev.params.add("eval.text.embed", normal_init(rng, {ev.vocab.size(), w}, 1.0 / std::sqrt(double(w))));
  ev.params.add("eval.text.pos", normal_init(rng, {config.max_tokens, w}, 0.1));
  te::init_linear(ev.params, rng, "eval.text.mlp1", w, config.hidden);
  te::init_linear(ev.params, rng, "eval.text.mlp2", config.hidden, config.hidden);
  te::init_linear(ev.params, rng, "eval.text.out", config.hidden, config.embed);
  te::init_linear(ev.params, rng, "eval.motion.mlp1", config.chunks * config.motion_dim, config.hidden);
  te::init_linear(ev.params, rng, "eval.motion.mlp2", config.hidden, config.hidden);
  te::init_linear(ev.params, rng, "eval.motion.out", config.hidden, config.embed);
  return ev;
}

namespace {

Var unit_rows(const Var& x) { return div(x, add_scalar(norm(x, 1), 1e-12)); }

}  // namespace

Var Evaluator::text_embeddings(Binder& p, const std::vector<std::string>& prompts) const {
  if (prompts.empty()) throw Error("evaluation", "empty", "no prompts to embed");
  std::vector<std::size_t> ids, pos;
  std::vector<std::size_t> counts;
  for (const auto& prompt : prompts) {
    auto tokens = text_graph::tokenize(prompt);
    if (tokens.size() > config.max_tokens) tokens.resize(config.max_tokens);
    if (tokens.empty()) throw Error("evaluation", "empty", "prompt has no tokens");
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      ids.push_back(vocab.index(tokens[i]));
      pos.push_back(i);
    }
    counts.push_back(tokens.size());
  }
  Var rows = add(gather_rows(p("eval.text.embed"), ids), gather_rows(p("eval.text.pos"), pos));
  Var h = te::silu(te::linear(p, "eval.text.mlp1", rows));
  h = te::silu(te::linear(p, "eval.text.mlp2", h));
  Tensor pool({prompts.size(), ids.size()}, 0.0);
  std::size_t offset = 0;
  for (std::size_t b = 0; b < counts.size(); ++b) {
    for (std::size_t i = 0; i < counts[b]; ++i) pool(b, offset + i) = 1.0 / double(counts[b]);
    offset += counts[b];
  }
  return unit_rows(te::linear(p, "eval.text.out", matmul(constant(pool), h)));
}

Tensor chunk_features(const Tensor& frames, std::size_t chunks) {
  const std::size_t n = frames.rows(), d = frames.cols();
  if (n < chunks) throw Error("evaluation", "shape", "motion shorter than the chunk count");
  Tensor out({1, chunks * d}, 0.0);
  for (std::size_t c = 0; c < chunks; ++c) {
    const std::size_t lo = c * n / chunks, hi = (c + 1) * n / chunks;
    for (std::size_t f = lo; f < hi; ++f)
      for (std::size_t k = 0; k < d; ++k) out(0, c * d + k) += frames(f, k) / double(hi - lo);
  }
  return out;
}

Var Evaluator::motion_features(Binder& p, const std::vector<Tensor>& normalized) const {
  if (normalized.empty()) throw Error("evaluation", "empty", "no motions to embed");
  const std::size_t width = config.chunks * config.motion_dim;
  Tensor feats({normalized.size(), width});
  for (std::size_t b = 0; b < normalized.size(); ++b) {
    if (normalized[b].cols() != config.motion_dim)
      throw Error("evaluation", "shape", "motion width does not match the evaluator");
    Tensor row = chunk_features(normalized[b], config.chunks);
    for (std::size_t k = 0; k < width; ++k) feats(b, k) = row(0, k);
  }
  Var h = te::silu(te::linear(p, "eval.motion.mlp1", constant(feats)));
  h = te::silu(te::linear(p, "eval.motion.mlp2", h));
  return te::linear(p, "eval.motion.out", h);
}

Var Evaluator::motion_embeddings(Binder& p, const std::vector<Tensor>& normalized) const {
  return unit_rows(motion_features(p, normalized));
}

Tensor Evaluator::embed_texts(const std::vector<std::string>& prompts) const {
  NoGradGuard guard;
  Binder p(params, false);
  return text_embeddings(p, prompts).value();
}

Tensor Evaluator::embed_motions(const std::vector<motion_data::MotionSequence>& motions) const {
  NoGradGuard guard;
  Binder p(params, false);
  std::vector<Tensor> norm;
  for (const auto& m : motions) norm.push_back(stats.apply(m.frames));
  return motion_embeddings(p, norm).value();
}

Evaluator::MotionCodes Evaluator::encode_motions(const std::vector<motion_data::MotionSequence>& motions) const {
  NoGradGuard guard;
  Binder p(params, false);
  std::vector<Tensor> norm;
  for (const auto& m : motions) norm.push_back(stats.apply(m.frames));
  Var f = motion_features(p, norm);
  return {f.value(), unit_rows(f).value()};
}

Var info_nce(const Var& text, const Var& motion, double temperature) {
  const std::size_t b = text.rows();
  if (motion.rows() != b) throw Error("evaluation", "shape", "contrastive batch sides differ");
  Var logits = scale(matmul(text, transpose(motion)), 1.0 / temperature);
  Var diag = constant(Tensor::identity(b));
  Var rows = sum(mul(log(softmax(logits, 1)), diag));
  Var cols = sum(mul(log(softmax(logits, 0)), diag));
  return scale(add(rows, cols), -0.5 / double(b));
}

numerics::Checkpoint Evaluator::to_checkpoint() const {
  numerics::Checkpoint ck;
  ck.metadata["evaluator"] = config.to_json();
  ck.metadata["vocab"] = vocab.to_json();
  ck.metadata["stats"] = stats.to_json();
  ck.params = params;
  return ck;
}

Evaluator Evaluator::from_checkpoint(const numerics::Checkpoint& ck) {
  if (!ck.metadata.contains("evaluator") || !ck.metadata.contains("vocab") || !ck.metadata.contains("stats"))
    throw Error("evaluation", "bad_checkpoint", "checkpoint is not an evaluator");
  Evaluator ev{EvaluatorConfig::from_json(ck.metadata["evaluator"]), te::Vocabulary::from_json(ck.metadata["vocab"]),
               motion_data::NormStats::from_json(ck.metadata["stats"]), ck.params};
  Evaluator fresh = create(ev.config, ev.vocab, ev.stats, 0);
  if (fresh.params.size() != ev.params.size())
    throw Error("evaluation", "bad_checkpoint", "evaluator checkpoint has unexpected parameters");
  for (const auto& [name, value] : fresh.params)
    if (!ev.params.contains(name) || ev.params.get(name).shape() != value.shape())
      throw Error("evaluation", "bad_checkpoint", "evaluator parameter " + name + " is missing or misshapen");
  return ev;
}

std::vector<double> train_evaluator(Evaluator& ev, const std::vector<std::string>& prompts,
                                    const std::vector<motion_data::MotionSequence>& motions,
                                    const EvaluatorTrainOptions& opts) {
  if (prompts.size() != motions.size() || prompts.empty())
    throw Error("evaluation", "shape", "evaluator training needs matching prompts and motions");
  std::map<std::string, std::vector<std::size_t>> by_prompt;
  for (std::size_t i = 0; i < prompts.size(); ++i) by_prompt[prompts[i]].push_back(i);
  std::vector<const std::vector<std::size_t>*> groups;
  for (const auto& [prompt, idx] : by_prompt) groups.push_back(&idx);
  const std::size_t batch = std::min(opts.batch, groups.size());
  if (batch < 2) throw Error("evaluation", "empty_corpus", "need at least two distinct prompts");

  std::vector<Tensor> normalized;
  for (const auto& m : motions) normalized.push_back(ev.stats.apply(m.frames));
  Rng rng(opts.seed);
  Adam adam;
  std::vector<double> losses;
  std::vector<std::size_t> order(groups.size());
  for (long step = 0; step < opts.steps; ++step) {
    // Partial Fisher-Yates: the first `batch` entries are a uniform draw.
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = 0; i < batch; ++i) std::swap(order[i], order[i + rng.index(order.size() - i)]);
    std::vector<std::string> texts;
    std::vector<Tensor> clips;
    for (std::size_t i = 0; i < batch; ++i) {
      const auto& idx = *groups[order[i]];
      const std::size_t pick = idx[rng.index(idx.size())];
      texts.push_back(prompts[pick]);
      clips.push_back(normalized[pick]);
    }
    Binder p(ev.params, true);
    Var loss = info_nce(ev.text_embeddings(p, texts), ev.motion_embeddings(p, clips), ev.config.temperature);
    const double lr = cosine_lr(step, opts.steps, opts.lr, opts.lr * 0.1);
    adam.step(ev.params, p.collect(backward(loss)), lr);
    losses.push_back(loss.value().item());
  }
  return losses;
}

}  // namespace fgt2m::evaluation
