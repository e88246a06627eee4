// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/diffusion/model.hpp"

#include <memory>

#include "fgt2m/common/error.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::diffusion {

using namespace numerics;
using nlohmann::json;
namespace te = text_encoder;
namespace fd = fusion_denoiser;

namespace {

const char* axes_name(te::ContextAxes a) { return a == te::ContextAxes::kEfficient ? "efficient" : "swapped"; }
te::ContextAxes axes_from(const std::string& s) {
  if (s == "efficient") return te::ContextAxes::kEfficient;
  if (s == "swapped") return te::ContextAxes::kSwapped;
  throw Error("diffusion", "bad_config", "unknown attention axes '" + s + "'");
}
const char* join_name(fd::ReferenceJoin j) { return j == fd::ReferenceJoin::kTokens ? "tokens" : "channels"; }
fd::ReferenceJoin join_from(const std::string& s) {
  if (s == "tokens") return fd::ReferenceJoin::kTokens;
  if (s == "channels") return fd::ReferenceJoin::kChannels;
  throw Error("diffusion", "bad_config", "unknown reference join '" + s + "'");
}

}  // namespace

json ModelConfig::to_json() const {
  return {{"width", text.width},
          {"prompt_max", text.prompt_max},
          {"parsed_max", text.parsed_max},
          {"heads", text.heads},
          {"hgc_layers", text.hgc.layers},
          {"curvature", text.hgc.curvature.c()},
          {"use_hgc", text.use_hgc},
          {"use_parsed", text.use_parsed},
          {"text_axes", axes_name(text.axes)},
          {"motion_dim", denoiser.motion_dim},
          {"d_model", denoiser.d_model},
          {"blocks", denoiser.blocks},
          {"max_frames", denoiser.max_frames},
          {"reference_join", join_name(denoiser.join)},
          {"fusion_axes", axes_name(denoiser.axes)},
          {"sentence_fusion", denoiser.sentence_fusion},
          {"word_fusion", denoiser.word_fusion},
          {"T", T},
          {"beta_min", beta_min},
          {"beta_max", beta_max},
          {"condition_drop", condition_drop}};
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    c.text.width = j.at("width").get<std::size_t>();
    c.text.prompt_max = j.at("prompt_max").get<std::size_t>();
    c.text.parsed_max = j.at("parsed_max").get<std::size_t>();
    c.text.heads = j.at("heads").get<std::size_t>();
    c.text.hgc.layers = j.at("hgc_layers").get<std::size_t>();
    c.text.hgc.curvature = hyperbolic::Curvature(j.at("curvature").get<double>());
    c.text.use_hgc = j.at("use_hgc").get<bool>();
    c.text.use_parsed = j.at("use_parsed").get<bool>();
    c.text.axes = axes_from(j.at("text_axes").get<std::string>());
    c.denoiser.motion_dim = j.at("motion_dim").get<std::size_t>();
    c.denoiser.d_model = j.at("d_model").get<std::size_t>();
    c.denoiser.blocks = j.at("blocks").get<std::size_t>();
    c.denoiser.heads = c.text.heads;
    c.denoiser.max_frames = j.at("max_frames").get<std::size_t>();
    c.denoiser.join = join_from(j.at("reference_join").get<std::string>());
    c.denoiser.axes = axes_from(j.at("fusion_axes").get<std::string>());
    c.denoiser.sentence_fusion = j.at("sentence_fusion").get<bool>();
    c.denoiser.word_fusion = j.at("word_fusion").get<bool>();
    c.T = j.at("T").get<std::size_t>();
    c.denoiser.steps = c.T;
    c.beta_min = j.at("beta_min").get<double>();
    c.beta_max = j.at("beta_max").get<double>();
    c.condition_drop = j.at("condition_drop").get<double>();
  } catch (const json::exception& e) {
    throw Error("diffusion", "bad_config", std::string("model config: ") + e.what());
  }
  return c;
}

Condition make_condition(const std::string& prompt, const semantic_parsing::ParsedPrompt& parse) {
  return {prompt, text_graph::parse_template(prompt), semantic_parsing::flatten_parse(parse)};
}

std::size_t joints_for_dim(std::size_t dim) {
  if (dim < 28 || (dim - 4) % 12 != 0)
    throw Error("diffusion", "shape", "pose width " + std::to_string(dim) + " is not 4 + 12 J");
  return (dim - 4) / 12;
}

Model Model::create(const ModelConfig& config, te::Vocabulary vocab, motion_data::NormStats stats,
                    std::uint64_t seed) {
  if (config.text.width != config.denoiser.d_model)
    throw Error("diffusion", "bad_config", "text width must equal d_model");
  if (stats.mean.size() != config.denoiser.motion_dim)
    throw Error("diffusion", "bad_config", "normalization stats do not match motion_dim");
  Model m{config, std::move(vocab), std::move(stats), {}};
  m.config.denoiser.steps = config.T;
  m.config.denoiser.heads = config.text.heads;
  Rng rng(seed);
  te::init_text_encoder(m.params, rng, m.config.text, m.vocab.size());
  fd::init_denoiser(m.params, rng, m.config.denoiser);
  return m;
}

DiffusionSchedule Model::schedule() const { return make_schedule(config.T, config.beta_min, config.beta_max); }

te::TextFeatures Model::encode(Binder& p, const Condition& c) const {
  return te::encode_text(p, config.text, vocab, c.graph, c.parsed);
}

Var Model::predict_x0(Binder& p, const Var& x_t, std::size_t t, const te::TextFeatures* cond) const {
  return fd::denoiser_forward(p, config.denoiser, x_t, t, cond);
}

X0Predictor Model::predictor(const Condition& c) const {
  auto features = std::make_shared<te::TextFeatures>();
  {
    NoGradGuard guard;
    Binder p(params, false);
    *features = encode(p, c);
  }
  return [this, features](const Tensor& x_t, std::size_t t, bool conditional) {
    NoGradGuard guard;
    Binder p(params, false);
    return predict_x0(p, constant(x_t), t, conditional ? features.get() : nullptr).value();
  };
}

motion_data::MotionSequence Model::generate(const Condition& c, const GuidanceConfig& g, std::uint64_t seed,
                                            std::size_t frames, double fps) const {
  Tensor x = sample(predictor(c), g, schedule(), frames, config.denoiser.motion_dim, seed);
  return motion_data::MotionSequence(motion_data::make_layout(joints_for_dim(config.denoiser.motion_dim)),
                                     stats.invert(x), fps);
}

Checkpoint Model::to_checkpoint(const json& extra) const {
  Checkpoint ck;
  ck.metadata = extra;
  ck.metadata["model"] = config.to_json();
  ck.metadata["vocab"] = vocab.to_json();
  ck.metadata["stats"] = stats.to_json();
  ck.params = params;
  return ck;
}

Model Model::from_checkpoint(const Checkpoint& ck) {
  if (!ck.metadata.contains("model") || !ck.metadata.contains("vocab") || !ck.metadata.contains("stats"))
    throw Error("diffusion", "bad_checkpoint", "checkpoint lacks model, vocab or stats metadata");
  Model m{ModelConfig::from_json(ck.metadata["model"]), te::Vocabulary::from_json(ck.metadata["vocab"]),
          motion_data::NormStats::from_json(ck.metadata["stats"]), ck.params};
  // Shapes must agree with a freshly initialized model of the same config.
  Model fresh = create(m.config, m.vocab, m.stats, 0);
  for (const auto& [name, value] : fresh.params) {
    if (!m.params.contains(name)) throw Error("diffusion", "bad_checkpoint", "missing parameter " + name);
    if (m.params.get(name).shape() != value.shape())
      throw Error("diffusion", "bad_checkpoint", "parameter " + name + " has the wrong shape");
  }
  if (m.params.size() != fresh.params.size())
    throw Error("diffusion", "bad_checkpoint", "checkpoint has unexpected parameters");
  return m;
}

}  // namespace fgt2m::diffusion
