// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::text_graph {

struct Token {
  std::size_t index = 0;  // 1-based position
  std::string surface;
  std::string upos;
  std::size_t head = 0;  // 0 marks the root
  std::string deprel;

  friend bool operator==(const Token&, const Token&) = default;
};

struct Edge {
  std::size_t head;
  std::size_t dependent;
  std::string deprel;
};

/// A sentence as a dependency tree: one node per token, one edge per non-root
/// token. Construction validates the tree; an invalid token list never becomes
/// a graph.
class DependencyGraph {
 public:
  explicit DependencyGraph(std::vector<Token> tokens);

  const std::vector<Token>& tokens() const noexcept { return tokens_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::size_t size() const noexcept { return tokens_.size(); }
  std::size_t root() const noexcept { return root_; }
  /// 1-based lookup.
  const Token& token(std::size_t index) const { return tokens_.at(index - 1); }
  std::vector<std::size_t> children(std::size_t index) const;
  std::vector<std::string> surfaces() const;
  std::string text() const;

  friend bool operator==(const DependencyGraph& a, const DependencyGraph& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<Token> tokens_;
  std::vector<Edge> edges_;
  std::size_t root_ = 0;
};

/// Why a token list is not a tree; `token` is the 1-based offender (0 if none).
struct TreeViolation {
  std::string code;
  std::string message;
  std::size_t token = 0;
};

/// Empty result when the tokens form a valid single-rooted tree.
std::vector<TreeViolation> check_tree(const std::vector<Token>& tokens);

enum class AdjacencyMode { kDirected, kSymmetric, kSymmetricSelfLoops };

/// 0/1 matrix over 0-based node positions. Directed mode sets (head, dependent).
numerics::Tensor adjacency(const DependencyGraph& g, AdjacencyMode mode);

/// BFS depth from the root (depth 0) to the 1-based indices at that depth, ascending.
std::map<std::size_t, std::vector<std::size_t>> depth_layers(const DependencyGraph& g);

/// Lowercases, splits on whitespace and detaches a trailing period.
std::vector<std::string> tokenize(std::string_view text);

}  // namespace fgt2m::text_graph
