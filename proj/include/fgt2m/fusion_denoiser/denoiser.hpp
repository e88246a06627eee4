// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fgt2m/fusion_denoiser/fusion.hpp"

namespace fgt2m::fusion_denoiser {

struct DenoiserConfig {
  std::size_t motion_dim = 64;
  std::size_t d_model = 64;
  std::size_t blocks = 2;
  std::size_t heads = 4;
  std::size_t max_frames = 64;
  std::size_t steps = 1000;  // largest timestep accepted
  ReferenceJoin join = ReferenceJoin::kTokens;
  ContextAxes axes = ContextAxes::kEfficient;
  bool sentence_fusion = true;
  bool word_fusion = true;
};

void validate(const DenoiserConfig& cfg);

/// Row t of the standard sin/cos table: sin on even channels, cos on odd.
Tensor sinusoidal_embedding(double position, std::size_t width);
/// One row per frame.
Tensor frame_encoding(std::size_t frames, std::size_t width);

/// Parameters under "den.".
void init_denoiser(ParameterStore& store, Rng& rng, const DenoiserConfig& cfg);

/// Predicts the clean sequence from x_t (S x motion_dim) at step t in [1, steps].
/// A null `cond` selects the learned null condition.
Var denoiser_forward(Binder& p, const DenoiserConfig& cfg, const Var& x_t, std::size_t t, const TextFeatures* cond);

}  // namespace fgt2m::fusion_denoiser
