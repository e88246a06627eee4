// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/fusion_denoiser/denoiser.hpp"

#include <cmath>

#include "fgt2m/common/error.hpp"

namespace fgt2m::fusion_denoiser {

using namespace numerics;
namespace te = text_encoder;

void validate(const DenoiserConfig& cfg) {
  if (cfg.motion_dim == 0 || cfg.d_model == 0 || cfg.blocks == 0 || cfg.max_frames == 0 || cfg.steps == 0)
    throw Error("fusion_denoiser", "bad_config", "denoiser sizes must be positive");
  if (cfg.heads == 0 || cfg.d_model % cfg.heads != 0)
    throw Error("fusion_denoiser", "bad_config",
                "d_model " + std::to_string(cfg.d_model) + " is not divisible by " + std::to_string(cfg.heads) +
                    " heads");
}

Tensor sinusoidal_embedding(double position, std::size_t width) {
  Tensor out({1, width});
  for (std::size_t c = 0; c < width; ++c) {
    const double freq = std::pow(10000.0, -static_cast<double>(c / 2 * 2) / static_cast<double>(width));
    out(0, c) = c % 2 == 0 ? std::sin(position * freq) : std::cos(position * freq);
  }
  return out;
}

Tensor frame_encoding(std::size_t frames, std::size_t width) {
  Tensor out({frames, width});
  for (std::size_t f = 0; f < frames; ++f) {
    Tensor row = sinusoidal_embedding(static_cast<double>(f), width);
    for (std::size_t c = 0; c < width; ++c) out(f, c) = row(0, c);
  }
  return out;
}

void init_denoiser(ParameterStore& store, Rng& rng, const DenoiserConfig& cfg) {
  validate(cfg);
  const std::size_t d = cfg.d_model;
  te::init_linear(store, rng, "den.in", cfg.motion_dim, d);
  te::init_linear(store, rng, "den.time1", d, d);
  te::init_linear(store, rng, "den.time2", d, d);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "den.block." + std::to_string(b);
    te::init_layer_norm(store, pre + ".ln_attn", d);
    te::init_self_attention(store, rng, pre + ".attn", d);
    store.add(pre + ".lambda_l", Tensor({1, 1}, 0.1));
    store.add(pre + ".lambda_p", Tensor({1, 1}, 0.1));
    te::init_layer_norm(store, pre + ".ln_word", d);
    init_word_fusion(store, rng, pre + ".word", d, cfg.join);
    te::init_layer_norm(store, pre + ".ln_mlp", d);
    te::init_linear(store, rng, pre + ".mlp1", d, 4 * d);
    te::init_linear(store, rng, pre + ".mlp2", 4 * d, d);
  }
  te::init_layer_norm(store, "den.ln_out", d);
  te::init_linear(store, rng, "den.out", d, cfg.motion_dim);
}

Var denoiser_forward(Binder& p, const DenoiserConfig& cfg, const Var& x_t, std::size_t t, const TextFeatures* cond) {
  const std::size_t frames = x_t.rows();
  if (x_t.cols() != cfg.motion_dim)
    throw Error("fusion_denoiser", "shape",
                "motion has " + std::to_string(x_t.cols()) + " channels, expected " + std::to_string(cfg.motion_dim));
  if (frames == 0 || frames > cfg.max_frames)
    throw Error("fusion_denoiser", "shape",
                std::to_string(frames) + " frames outside [1, " + std::to_string(cfg.max_frames) + "]");
  if (t < 1 || t > cfg.steps)
    throw Error("fusion_denoiser", "bad_step", "timestep " + std::to_string(t) + " outside [1, " +
                                                   std::to_string(cfg.steps) + "]");
  const TextFeatures text = cond ? *cond : te::null_features(p);
  if (text.S_l.cols() != cfg.d_model)
    throw Error("fusion_denoiser", "shape", "text width must equal d_model");

  Var temb = te::linear(p, "den.time2", te::silu(te::linear(p, "den.time1",
                                                                constant(sinusoidal_embedding(double(t), cfg.d_model)))));
  Var h = te::linear(p, "den.in", x_t);
  h = add(add(h, temb), constant(frame_encoding(frames, cfg.d_model)));
  const std::vector<bool> all(frames, true);
  for (std::size_t b = 0; b < cfg.blocks; ++b) {
    const std::string pre = "den.block." + std::to_string(b);
    h = add(h, te::self_attention(p, pre + ".attn", te::layer_norm(p, pre + ".ln_attn", h), all, cfg.heads));
    if (cfg.sentence_fusion) h = sentence_fusion(h, text.S_l, text.S_t, p(pre + ".lambda_l"), p(pre + ".lambda_p"));
    if (cfg.word_fusion)
      h = add(h, word_fusion(p, pre + ".word", te::layer_norm(p, pre + ".ln_word", h), text, cfg.join, cfg.axes));
    Var m = te::layer_norm(p, pre + ".ln_mlp", h);
    h = add(h, te::linear(p, pre + ".mlp2", te::silu(te::linear(p, pre + ".mlp1", m))));
  }
  return te::linear(p, "den.out", te::layer_norm(p, "den.ln_out", h));
}

}  // namespace fgt2m::fusion_denoiser
