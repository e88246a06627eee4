// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_encoder/vocabulary.hpp"

#include "fgt2m/common/error.hpp"
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::text_encoder {

Vocabulary::Vocabulary() {
  add(kUnk);
  add(kPad);
  add(kBos);
}

Vocabulary::Vocabulary(const std::vector<std::string>& tokens) : Vocabulary() {
  for (const auto& t : tokens) add(t);
}

std::size_t Vocabulary::add(const std::string& token) {
  auto it = index_.find(token);
  if (it != index_.end()) return it->second;
  tokens_.push_back(token);
  index_.emplace(token, tokens_.size() - 1);
  return tokens_.size() - 1;
}

std::size_t Vocabulary::index(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? unk() : it->second;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() < 3 || j[0] != kUnk || j[1] != kPad || j[2] != kBos)
    throw Error("text_encoder", "bad_vocab", "vocabulary must be an array starting with <unk>, <pad>, <bos>");
  Vocabulary v;
  for (std::size_t i = 3; i < j.size(); ++i) {
    if (!j[i].is_string()) throw Error("text_encoder", "bad_vocab", "vocabulary entry " + std::to_string(i) + " is not a string");
    if (v.contains(j[i].get<std::string>())) throw Error("text_encoder", "bad_vocab", "duplicate vocabulary entry");
    v.add(j[i].get<std::string>());
  }
  return v;
}

std::string slot_marker(std::string_view key) { return "<slot:" + std::string(key) + ">"; }

std::vector<std::string> parsed_stream_tokens(const std::vector<std::string>& flattened, std::size_t max_tokens) {
  using namespace semantic_parsing;
  if (flattened.size() != kSlotCount)
    throw Error("text_encoder", "shape", "parsed stream needs 15 slot strings, got " + std::to_string(flattened.size()));
  if (max_tokens != 0 && max_tokens < kSlotCount)
    throw Error("text_encoder", "shape", "parsed stream budget must cover the 15 slot markers");
  std::vector<std::vector<std::string>> words(kSlotCount);
  std::size_t total = 0;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    for (auto& w : text_graph::tokenize(flattened[i])) {
      // Glosses are "word: meaning"; the colon carries no content.
      if (!w.empty() && (w.back() == ':' || w.back() == ',' || w.back() == ';')) w.pop_back();
      if (!w.empty()) words[i].push_back(std::move(w));
    }
    total += words[i].size();
  }
  if (max_tokens != 0 && total + kSlotCount > max_tokens) {
    // Largest per-slot cap that fits the budget.
    const std::size_t budget = max_tokens - kSlotCount;
    std::size_t cap = 0;
    for (;; ++cap) {
      std::size_t used = 0;
      for (const auto& w : words) used += std::min(w.size(), cap + 1);
      if (used > budget) break;
    }
    for (auto& w : words)
      if (w.size() > cap) w.resize(cap);
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kSlotCount; ++i) {
    out.push_back(slot_marker(i < kActionSlots ? kActionKeys[i] : kSemanticKeys[i - kActionSlots]));
    out.insert(out.end(), words[i].begin(), words[i].end());
  }
  return out;
}

}  // namespace fgt2m::text_encoder
