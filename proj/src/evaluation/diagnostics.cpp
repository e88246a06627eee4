// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/evaluation/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "fgt2m/common/error.hpp"
#include "fgt2m/hyperbolic/ops.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::evaluation {

using namespace numerics;

double rareness(const Tensor& query, const Tensor& reference) {
  if (reference.rows() == 0) throw Error("evaluation", "empty_corpus", "rareness needs training texts");
  if (query.cols() != reference.cols()) throw Error("evaluation", "shape", "embedding widths differ");
  double qn = 0.0;
  for (std::size_t c = 0; c < query.cols(); ++c) qn += query(0, c) * query(0, c);
  qn = std::sqrt(qn);
  double best = -1.0;
  for (std::size_t i = 0; i < reference.rows(); ++i) {
    double dot = 0.0, rn = 0.0;
    for (std::size_t c = 0; c < query.cols(); ++c) {
      dot += query(0, c) * reference(i, c);
      rn += reference(i, c) * reference(i, c);
    }
    const double denom = qn * std::sqrt(rn);
    best = std::max(best, denom > 0.0 ? dot / denom : 0.0);
  }
  return std::clamp(1.0 - best, 0.0, 2.0);
}

std::vector<std::size_t> quartiles(const std::vector<double>& keys, const std::vector<std::string>& names) {
  const std::size_t n = keys.size();
  if (names.size() != n) throw Error("evaluation", "shape", "keys and names differ in length");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return keys[a] != keys[b] ? keys[a] < keys[b] : names[a] < names[b];
  });
  std::vector<std::size_t> bucket(n);
  std::size_t first = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && keys[order[r]] != keys[order[r - 1]]) first = r;
    bucket[order[r]] = std::min<std::size_t>(3, 4 * first / n);
  }
  return bucket;
}

std::size_t fine_grained_pos_count(const text_graph::DependencyGraph& g) {
  static const std::set<std::string> kQuantifierWords = {"both", "all", "every", "each", "some",
                                                         "many", "several", "few", "any"};
  std::size_t n = 0;
  for (const auto& t : g.tokens()) {
    std::string w = t.surface;
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) { return std::tolower(c); });
    if (t.upos == "ADJ" || t.upos == "ADV" || t.upos == "CCONJ" || t.upos == "SCONJ" || t.upos == "NUM") ++n;
    else if (t.upos == "DET" && kQuantifierWords.count(w)) ++n;
  }
  return n;
}

nlohmann::json Stratified::to_json(const char* key_name) const {
  nlohmann::json items = nlohmann::json::array();
  for (std::size_t i = 0; i < prompts.size(); ++i)
    items.push_back({{"prompt", prompts[i]}, {key_name, keys[i]}, {"bucket", kQuartileNames[bucket[i]]}});
  nlohmann::json counts = nlohmann::json::object();
  for (const char* name : kQuartileNames) counts[name] = 0;
  for (std::size_t b : bucket) counts[kQuartileNames[b]] = counts[kQuartileNames[b]].get<int>() + 1;
  return {{"items", items}, {"counts", counts}};
}

Stratified pos_stratify(const std::vector<text_graph::DependencyGraph>& graphs) {
  Stratified s;
  for (const auto& g : graphs) {
    s.prompts.push_back(g.text());
    s.keys.push_back(static_cast<double>(fine_grained_pos_count(g)));
  }
  s.bucket = quartiles(s.keys, s.prompts);
  return s;
}

Stratified rareness_stratify(const std::vector<std::string>& prompts, const Tensor& prompt_embeddings,
                             const Tensor& training_embeddings) {
  if (prompt_embeddings.rows() != prompts.size()) throw Error("evaluation", "shape", "one embedding per prompt");
  Stratified s;
  s.prompts = prompts;
  for (std::size_t i = 0; i < prompts.size(); ++i)
    s.keys.push_back(rareness(prompt_embeddings.row(i).reshaped({1, prompt_embeddings.cols()}), training_embeddings));
  s.bucket = quartiles(s.keys, s.prompts);
  return s;
}

nlohmann::json HierarchyOrder::to_json() const {
  return {{"D1", distance[0]}, {"D2", distance[1]}, {"D3", distance[2]},
          {"nodes", {count[0], count[1], count[2]}}};
}

HierarchyOrder hierarchy_order_from_points(const std::vector<Tensor>& points,
                                           const std::vector<text_graph::DependencyGraph>& graphs,
                                           const hyperbolic::Curvature& k) {
  if (points.size() != graphs.size()) throw Error("evaluation", "shape", "one point matrix per graph");
  HierarchyOrder out;
  std::array<double, 3> total{};
  for (std::size_t gi = 0; gi < graphs.size(); ++gi) {
    const auto& g = graphs[gi];
    const Tensor& x = points[gi];
    if (x.rows() != g.size()) throw Error("evaluation", "shape", "point rows do not match graph size");
    const std::size_t root = g.root() - 1;
    hyperbolic::PoincarePoint r(x.row(root).values(), k);
    for (const auto& [depth, nodes] : text_graph::depth_layers(g)) {
      if (depth < 1 || depth > 3) continue;
      for (std::size_t node : nodes) {
        hyperbolic::PoincarePoint p(x.row(node - 1).values(), k);
        total[depth - 1] += hyperbolic::geodesic_distance(p, r);
        ++out.count[depth - 1];
      }
    }
  }
  if (out.count[2] == 0) throw Error("evaluation", "no_depth3", "no depth-3 nodes in the tree corpus");
  for (std::size_t d = 0; d < 3; ++d) out.distance[d] = out.count[d] ? total[d] / double(out.count[d]) : 0.0;
  return out;
}

Tensor hyperbolic_nodes(const ParameterStore& params, const text_encoder::TextEncoderConfig& cfg,
                        const text_encoder::Vocabulary& vocab, const text_graph::DependencyGraph& g) {
  NoGradGuard guard;
  Binder p(params, false);
  auto e = text_encoder::embed_tokens(p("text.embed"), vocab, g.surfaces());
  Var rows = add(e.rows, slice(p("text.pos_prompt"), 0, 0, g.size()));
  Var h = text_encoder::hgc_forward(p, "text.hgc", rows, g, cfg.hgc);
  return hyperbolic::rows::exp0(h, cfg.hgc.curvature).value();
}

std::map<std::size_t, double> depth_distances(const Tensor& points, const text_graph::DependencyGraph& g,
                                              const hyperbolic::Curvature& k) {
  if (points.rows() != g.size()) throw Error("evaluation", "shape", "point rows do not match graph size");
  hyperbolic::PoincarePoint r(points.row(g.root() - 1).values(), k);
  std::map<std::size_t, double> out;
  for (const auto& [depth, nodes] : text_graph::depth_layers(g)) {
    if (depth == 0) continue;
    double total = 0.0;
    for (std::size_t node : nodes)
      total += hyperbolic::geodesic_distance(hyperbolic::PoincarePoint(points.row(node - 1).values(), k), r);
    out[depth] = total / double(nodes.size());
  }
  return out;
}

HierarchyOrder hierarchy_order(const ParameterStore& params, const text_encoder::TextEncoderConfig& cfg,
                               const text_encoder::Vocabulary& vocab,
                               const std::vector<text_graph::DependencyGraph>& graphs) {
  std::vector<Tensor> points;
  for (const auto& g : graphs) points.push_back(hyperbolic_nodes(params, cfg, vocab, g));
  return hierarchy_order_from_points(points, graphs, cfg.hgc.curvature);
}

}  // namespace fgt2m::evaluation
