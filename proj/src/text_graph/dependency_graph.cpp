// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_graph/dependency_graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>
#include <sstream>

#include "fgt2m/common/error.hpp"

namespace fgt2m::text_graph {

std::vector<TreeViolation> check_tree(const std::vector<Token>& tokens) {
  std::vector<TreeViolation> out;
  const std::size_t n = tokens.size();
  if (n == 0) {
    out.push_back({"empty", "sentence has no tokens", 0});
    return out;
  }
  std::size_t root = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const Token& t = tokens[i];
    if (t.index != i + 1) {
      out.push_back({"bad_index", "token " + std::to_string(i + 1) + " has index " + std::to_string(t.index), i + 1});
      continue;
    }
    if (t.head == t.index) {
      out.push_back({"self_head", "token " + std::to_string(t.index) + " is its own head", t.index});
    } else if (t.head > n) {
      out.push_back({"bad_head", "token " + std::to_string(t.index) + " has head " + std::to_string(t.head) +
                                     " beyond sentence length " + std::to_string(n), t.index});
    } else if (t.head == 0) {
      if (root != 0) {
        out.push_back({"multi_root", "tokens " + std::to_string(root) + " and " + std::to_string(t.index) +
                                         " both have head 0", t.index});
      } else {
        root = t.index;
      }
    }
  }
  if (!out.empty()) return out;
  if (root == 0) {
    out.push_back({"no_root", "no token has head 0", 0});
    return out;
  }
  // With one root and n-1 in-range heads, the graph is a tree iff every head
  // chain reaches the root.
  for (std::size_t i = 1; i <= n; ++i) {
    std::size_t cur = i;
    for (std::size_t steps = 0; cur != 0; ++steps) {
      if (steps > n) {
        out.push_back({"cycle", "token " + std::to_string(i) + " lies on or leads into a head cycle", i});
        return out;
      }
      cur = tokens[cur - 1].head;
    }
  }
  return out;
}

DependencyGraph::DependencyGraph(std::vector<Token> tokens) : tokens_(std::move(tokens)) {
  auto violations = check_tree(tokens_);
  if (!violations.empty()) throw Error("text_graph", violations.front().code, violations.front().message);
  for (const Token& t : tokens_) {
    if (t.head == 0) {
      root_ = t.index;
    } else {
      edges_.push_back({t.head, t.index, t.deprel});
    }
  }
}

std::vector<std::size_t> DependencyGraph::children(std::size_t index) const {
  std::vector<std::size_t> out;
  for (const Token& t : tokens_)
    if (t.head == index) out.push_back(t.index);
  return out;
}

std::vector<std::string> DependencyGraph::surfaces() const {
  std::vector<std::string> out;
  out.reserve(tokens_.size());
  for (const Token& t : tokens_) out.push_back(t.surface);
  return out;
}

std::string DependencyGraph::text() const {
  std::string out;
  for (const Token& t : tokens_) {
    if (!out.empty() && t.upos != "PUNCT") out += ' ';
    out += t.surface;
  }
  return out;
}

numerics::Tensor adjacency(const DependencyGraph& g, AdjacencyMode mode) {
  const std::size_t n = g.size();
  numerics::Tensor a({n, n}, 0.0);
  for (const Edge& e : g.edges()) {
    a(e.head - 1, e.dependent - 1) = 1.0;
    if (mode != AdjacencyMode::kDirected) a(e.dependent - 1, e.head - 1) = 1.0;
  }
  if (mode == AdjacencyMode::kSymmetricSelfLoops)
    for (std::size_t i = 0; i < n; ++i) a(i, i) = 1.0;
  return a;
}

std::map<std::size_t, std::vector<std::size_t>> depth_layers(const DependencyGraph& g) {
  std::map<std::size_t, std::vector<std::size_t>> layers;
  std::deque<std::pair<std::size_t, std::size_t>> queue{{g.root(), 0}};
  while (!queue.empty()) {
    auto [node, depth] = queue.front();
    queue.pop_front();
    layers[depth].push_back(node);
    for (std::size_t child : g.children(node)) queue.emplace_back(child, depth + 1);
  }
  for (auto& [depth, nodes] : layers) std::sort(nodes.begin(), nodes.end());
  return layers;
}

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  std::istringstream in(lowered);
  std::string word;
  while (in >> word) {
    if (word.size() > 1 && word.back() == '.') {
      out.push_back(word.substr(0, word.size() - 1));
      out.emplace_back(".");
    } else {
      out.push_back(word);
    }
  }
  return out;
}

}  // namespace fgt2m::text_graph
