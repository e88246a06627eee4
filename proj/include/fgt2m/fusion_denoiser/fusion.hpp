// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fgt2m/text_encoder/encoder.hpp"

namespace fgt2m::fusion_denoiser {

using numerics::Binder;
using numerics::ParameterStore;
using numerics::Rng;
using numerics::Tensor;
using numerics::Var;
using text_encoder::ContextAxes;
using text_encoder::TextFeatures;

/// How each word stream is joined with the other stream's reference.
/// kTokens appends the reference as one extra row; kChannels appends it to
/// every row as extra features.
enum class ReferenceJoin { kTokens, kChannels };

/// X + lambda_l (X * sigmoid(X S_l^T)) + lambda_p (X * sigmoid(X S_p^T)), the
/// S x 1 gates broadcast over channels. Negative lambdas act as zero.
Var sentence_fusion(const Var& x, const Var& s_l, const Var& s_p, const Var& lambda_l, const Var& lambda_p);

/// Reference-mediated global attention of motion rows over both word streams.
/// Parameters under `prefix`: m_l, m_t (references), v_m, v_l, v_t, k_m, k_l,
/// k_t, q_m.
Var word_fusion(Binder& p, const std::string& prefix, const Var& x, const TextFeatures& text,
                ReferenceJoin join = ReferenceJoin::kTokens, ContextAxes axes = ContextAxes::kEfficient);
void init_word_fusion(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width,
                      ReferenceJoin join = ReferenceJoin::kTokens);

}  // namespace fgt2m::fusion_denoiser
