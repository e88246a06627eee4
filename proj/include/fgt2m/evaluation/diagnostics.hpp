// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/numerics/parameters.hpp"
#include "fgt2m/text_encoder/encoder.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::evaluation {

using numerics::Tensor;

/// 1 - max cosine similarity between `query` (1 x E) and the rows of `reference`.
double rareness(const Tensor& query, const Tensor& reference);

inline constexpr std::array<const char*, 4> kQuartileNames = {"0-25%", "25-50%", "50-75%", "75-100%"};

/// Quartile index per item, by rank of `keys` ascending. Items with equal keys
/// share the quartile of the first of them; `names` break ties in the ordering.
std::vector<std::size_t> quartiles(const std::vector<double>& keys, const std::vector<std::string>& names);

/// Number of adjectives, adverbs, conjunctions and quantifiers in a parse.
std::size_t fine_grained_pos_count(const text_graph::DependencyGraph& g);

struct Stratified {
  std::vector<std::string> prompts;
  std::vector<double> keys;
  std::vector<std::size_t> bucket;

  nlohmann::json to_json(const char* key_name) const;
};

Stratified pos_stratify(const std::vector<text_graph::DependencyGraph>& graphs);
Stratified rareness_stratify(const std::vector<std::string>& prompts, const Tensor& prompt_embeddings,
                             const Tensor& training_embeddings);

/// Mean geodesic distance to the root of the nodes at depths 1, 2 and 3 after
/// the text encoder's embedding and graph convolution.
struct HierarchyOrder {
  std::array<double, 3> distance{};
  std::array<std::size_t, 3> count{};

  bool ordered(double margin) const {
    return distance[1] - distance[0] >= margin && distance[2] - distance[1] >= margin;
  }
  nlohmann::json to_json() const;
};

HierarchyOrder hierarchy_order(const numerics::ParameterStore& params, const text_encoder::TextEncoderConfig& cfg,
                               const text_encoder::Vocabulary& vocab,
                               const std::vector<text_graph::DependencyGraph>& graphs);

/// Node features of one parse inside the ball: token and position embeddings,
/// graph convolution, then Exp0.
Tensor hyperbolic_nodes(const numerics::ParameterStore& params, const text_encoder::TextEncoderConfig& cfg,
                        const text_encoder::Vocabulary& vocab, const text_graph::DependencyGraph& g);

/// Mean geodesic distance to the root per depth, depths >= 1.
std::map<std::size_t, double> depth_distances(const Tensor& points, const text_graph::DependencyGraph& g,
                                              const hyperbolic::Curvature& k);

/// Same diagnostic on given hyperbolic node features (one matrix per graph,
/// rows already inside the ball).
HierarchyOrder hierarchy_order_from_points(const std::vector<Tensor>& points,
                                           const std::vector<text_graph::DependencyGraph>& graphs,
                                           const hyperbolic::Curvature& k);

}  // namespace fgt2m::evaluation
