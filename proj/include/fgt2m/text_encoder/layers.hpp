// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <vector>

#include "fgt2m/numerics/autodiff.hpp"
#include "fgt2m/numerics/parameters.hpp"

namespace fgt2m::text_encoder {

using numerics::Binder;
using numerics::ParameterStore;
using numerics::Rng;
using numerics::Tensor;
using numerics::Var;

inline constexpr double kMaskedLogit = -1e9;

/// Additive attention bias over keys: 0 for kept tokens, kMaskedLogit for
/// masked ones. Shape 1 x N.
Tensor key_bias(const std::vector<bool>& mask);
/// N x 1 column of the same values, for softmax over the token axis.
Tensor token_bias(const std::vector<bool>& mask);

Var silu(const Var& x);
Var linear(Binder& p, const std::string& prefix, const Var& x);
Var layer_norm(Binder& p, const std::string& prefix, const Var& x, double eps = 1e-5);
/// Mean over rows whose mask entry is true; 1 x C. All-false masks give zeros.
Var masked_mean(const Var& x, const std::vector<bool>& mask);

void init_linear(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t in, std::size_t out);
void init_layer_norm(ParameterStore& store, const std::string& prefix, std::size_t width);

/// Multi-head scaled dot-product self-attention; masked tokens never act as keys.
Var self_attention(Binder& p, const std::string& prefix, const Var& x, const std::vector<bool>& mask,
                   std::size_t heads);
void init_self_attention(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width);

/// Pre-norm encoder layer: x + MHA(LN(x)), then + MLP(LN(.)) with hidden 4x width.
Var transformer_layer(Binder& p, const std::string& prefix, const Var& x, const std::vector<bool>& mask,
                      std::size_t heads);
void init_transformer_layer(ParameterStore& store, Rng& rng, const std::string& prefix, std::size_t width);

}  // namespace fgt2m::text_encoder
