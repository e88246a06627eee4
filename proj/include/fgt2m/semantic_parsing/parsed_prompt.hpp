// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace fgt2m::semantic_parsing {

enum class BodyPart { kLeftArm, kRightArm, kLeftLeg, kRightLeg, kHead, kTorso };
inline constexpr std::array<BodyPart, 6> kBodyParts = {BodyPart::kLeftArm, BodyPart::kRightArm, BodyPart::kLeftLeg,
                                                       BodyPart::kRightLeg, BodyPart::kHead,    BodyPart::kTorso};

inline constexpr std::size_t kActionSlots = 7;
inline constexpr std::size_t kSemanticSlots = 8;
inline constexpr std::size_t kSlotCount = kActionSlots + kSemanticSlots;

/// Six body parts then the verb clarification.
inline constexpr std::array<std::string_view, kActionSlots> kActionKeys = {
    "left_arm", "right_arm", "left_leg", "right_leg", "head", "torso", "verb"};
inline constexpr std::array<std::string_view, kSemanticSlots> kSemanticKeys = {
    "noun", "adjective", "adverb", "quantifier", "conjunction", "preposition", "pronoun", "numeral"};
inline constexpr std::size_t kVerbSlot = 6;

inline constexpr int kSchemaVersion = 1;

enum class ParseSource { kFixture, kMock, kLlm };

std::string_view body_part_key(BodyPart p);
/// "left arm", "head", ...
std::string body_part_phrase(BodyPart p);
std::string_view source_name(ParseSource s);

struct ParsedPrompt {
  std::string prompt;
  std::array<std::string, kActionSlots> action;
  std::array<std::string, kSemanticSlots> semantic;
  ParseSource source = ParseSource::kFixture;

  std::string& part(BodyPart p) { return action[static_cast<std::size_t>(p)]; }
  const std::string& part(BodyPart p) const { return action[static_cast<std::size_t>(p)]; }

  friend bool operator==(const ParsedPrompt&, const ParsedPrompt&) = default;
};

/// Lowercase, trimmed, internal whitespace collapsed to single spaces.
std::string normalize_prompt(std::string_view prompt);

/// Entry form: {"prompt", "action": {...7}, "semantic": {...8}}.
nlohmann::json to_json(const ParsedPrompt& p);

/// The one schema validator every source goes through. Missing, extra, or
/// mistyped keys throw Error("semantic_parsing", "schema") with the JSON
/// pointer of the offending location, prefixed by `pointer`.
ParsedPrompt parse_entry(const nlohmann::json& entry, ParseSource source, const std::string& pointer = "");

/// Runs `p` through parse_entry so constructed parses meet the same checks.
ParsedPrompt validated(const ParsedPrompt& p);

using FixtureTable = std::map<std::string, ParsedPrompt>;

FixtureTable parse_fixtures(std::string_view json_text);
FixtureTable load_fixtures(const std::string& path);
std::string dump_fixtures(const FixtureTable& table);

/// 15 strings in slot order; empty slots become "none".
std::vector<std::string> flatten_parse(const ParsedPrompt& p);

}  // namespace fgt2m::semantic_parsing
