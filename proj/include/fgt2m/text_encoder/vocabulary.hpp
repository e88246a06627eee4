// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

namespace fgt2m::text_encoder {

inline constexpr const char* kUnk = "<unk>";
inline constexpr const char* kPad = "<pad>";
inline constexpr const char* kBos = "<bos>";

/// Token string <-> row index. Rows 0..2 are <unk>, <pad>, <bos>; unknown
/// strings resolve to <unk>.
class Vocabulary {
 public:
  Vocabulary();
  explicit Vocabulary(const std::vector<std::string>& tokens);

  /// Adds a token if absent; returns its index.
  std::size_t add(const std::string& token);
  std::size_t index(const std::string& token) const;
  bool contains(const std::string& token) const { return index_.count(token) != 0; }
  const std::string& token(std::size_t i) const { return tokens_.at(i); }
  std::size_t size() const noexcept { return tokens_.size(); }
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }

  std::size_t unk() const noexcept { return 0; }
  std::size_t pad() const noexcept { return 1; }
  std::size_t bos() const noexcept { return 2; }

  nlohmann::json to_json() const { return tokens_; }
  static Vocabulary from_json(const nlohmann::json& j);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::size_t> index_;
};

/// Marker token opening slot `key` in the parsed stream, e.g. "<slot:left_arm>".
std::string slot_marker(std::string_view key);

/// The parsed stream: for each of the 15 slots, its marker then the words of
/// its (flattened) text. With `max_tokens` > 0 the longest slots are cut first
/// (every slot keeps its marker and an equal share of the remaining budget).
std::vector<std::string> parsed_stream_tokens(const std::vector<std::string>& flattened,
                                              std::size_t max_tokens = 0);

}  // namespace fgt2m::text_encoder
