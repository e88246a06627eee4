// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/evaluation/report.hpp"

#include <map>
#include <set>

#include "fgt2m/common/error.hpp"

namespace fgt2m::evaluation {

using namespace numerics;

namespace {

using Motions = std::vector<motion_data::MotionSequence>;

Motions generate_all(const diffusion::Model& model, const std::vector<diffusion::Condition>& conds,
                     const diffusion::GuidanceConfig& g, std::uint64_t seed, std::size_t frames, double fps) {
  Motions out;
  for (std::size_t i = 0; i < conds.size(); ++i)
    out.push_back(model.generate(conds[i], g, Rng::derive_seed(seed, i), frames, fps));
  return out;
}

Motions noise_motions(const motion_data::NormStats& stats, const motion_data::PoseLayout& layout, std::size_t count,
                      std::size_t frames, double fps, std::uint64_t seed) {
  Rng rng(seed);
  Motions out;
  for (std::size_t i = 0; i < count; ++i)
    out.emplace_back(layout, stats.invert(rng.normal_tensor({frames, layout.dim})), fps);
  return out;
}

}  // namespace

MetricReport run_evaluation(const diffusion::Model& model, const Evaluator& evaluator,
                            const motion_data::Corpus& corpus, const EvalOptions& opts, const Progress& progress) {
  if (opts.repeats == 0) throw Error("evaluation", "bad_config", "repeats must be positive");
  auto say = [&](const std::string& s) {
    if (progress) progress(s);
  };
  const auto test = corpus.indices("test");
  std::vector<std::string> prompts;
  std::vector<diffusion::Condition> conds;
  Motions real;
  for (std::size_t i : test) {
    const auto& e = corpus.manifest.entries[i];
    prompts.push_back(e.prompt);
    conds.push_back(diffusion::make_condition(e.prompt, corpus.parses.at(e.parse_key)));
    real.push_back(corpus.motions[i]);
  }
  if (real.empty()) throw Error("evaluation", "empty_corpus", "the corpus has no test split");
  const std::size_t frames = corpus.manifest.frames;
  const double fps = corpus.manifest.fps;
  const auto layout = corpus.motions.front().layout;

  const Tensor text_emb = evaluator.embed_texts(prompts);
  // Text-motion metrics use the shared unit space; motion-only metrics use the
  // motion features before normalization.
  const auto real_codes = evaluator.encode_motions(real);
  const Tensor& real_emb = real_codes.embeddings;
  const Tensor& real_feat = real_codes.features;

  // Multimodality texts: the first distinct test prompts.
  std::vector<std::size_t> mm_idx;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < prompts.size() && mm_idx.size() < opts.mm_texts; ++i)
    if (seen.insert(prompts[i]).second) mm_idx.push_back(i);

  std::map<std::string, std::vector<double>> values;
  auto record = [&](const std::string& name, double v) { values[name].push_back(v); };
  for (std::size_t r = 0; r < opts.repeats; ++r) {
    const std::uint64_t rseed = Rng::derive_seed(opts.seed, r);
    Rng rng(Rng::derive_seed(rseed, 1));
    say("repeat " + std::to_string(r + 1) + "/" + std::to_string(opts.repeats) + ": sampling");
    const auto gen = evaluator.encode_motions(generate_all(model, conds, opts.guidance, rseed, frames, fps));
    auto rp = r_precision(text_emb, gen.embeddings, prompts, 3, rng);
    record("r_top1", rp[0]);
    record("r_top2", rp[1]);
    record("r_top3", rp[2]);
    record("fid", fid(gen.features, real_feat));
    record("mm_dist", mm_dist(text_emb, gen.embeddings));
    record("diversity", diversity(gen.features, opts.diversity_group, rng));

    std::vector<Tensor> per_text;
    for (std::size_t m = 0; m < mm_idx.size(); ++m) {
      std::vector<diffusion::Condition> same(opts.mm_samples, conds[mm_idx[m]]);
      per_text.push_back(
          evaluator.encode_motions(generate_all(model, same, opts.guidance, Rng::derive_seed(rseed, 100 + m), frames, fps))
              .features);
    }
    record("multimodality", multimodality(per_text, opts.mm_pairs, rng));

    auto gt = r_precision(text_emb, real_emb, prompts, 3, rng);
    record("gt_r_top3", gt[2]);
    record("gt_mm_dist", mm_dist(text_emb, real_emb));
    record("gt_diversity", diversity(real_feat, opts.diversity_group, rng));
    if (opts.baselines) {
      diffusion::GuidanceConfig uncond = opts.guidance;
      uncond.scale = 0.0;
      const auto u = evaluator.encode_motions(generate_all(model, conds, uncond, Rng::derive_seed(rseed, 2), frames, fps));
      record("uncond_mm_dist", mm_dist(text_emb, u.embeddings));
      record("uncond_r_top3", r_precision(text_emb, u.embeddings, prompts, 3, rng)[2]);
      record("uncond_fid", fid(u.features, real_feat));
      const auto n = evaluator.encode_motions(
          noise_motions(model.stats, layout, real.size(), frames, fps, Rng::derive_seed(rseed, 3)));
      record("noise_fid", fid(n.features, real_feat));
    }
  }
  MetricReport report;
  for (const auto& [name, v] : values) report.metrics[name] = summarize(v);
  report.meta = {{"repeats", opts.repeats},
                 {"test_clips", real.size()},
                 {"guidance", opts.guidance.scale},
                 {"sampler_steps", opts.guidance.steps},
                 {"seed", opts.seed},
                 {"mm_texts", mm_idx.size()},
                 {"mm_samples", opts.mm_samples}};
  return report;
}

}  // namespace fgt2m::evaluation
