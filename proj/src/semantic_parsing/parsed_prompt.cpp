// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"

#include <algorithm>
#include <cctype>
#include <set>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"

namespace fgt2m::semantic_parsing {

using nlohmann::json;

namespace {

[[noreturn]] void schema_error(const std::string& pointer, const std::string& what) {
  throw Error("semantic_parsing", "schema", (pointer.empty() ? "/" : pointer) + ": " + what);
}

std::string type_name(const json& j) { return j.type_name(); }

template <std::size_t N>
void read_section(const json& entry, const char* name, const std::array<std::string_view, N>& keys,
                  std::array<std::string, N>& out, const std::string& pointer) {
  const std::string here = pointer + "/" + name;
  if (!entry.contains(name)) schema_error(here, "missing key");
  const json& section = entry.at(name);
  if (!section.is_object()) schema_error(here, "expected object, found " + type_name(section));
  for (std::size_t i = 0; i < N; ++i) {
    const std::string key(keys[i]);
    if (!section.contains(key)) schema_error(here + "/" + key, "missing key");
    const json& v = section.at(key);
    if (!v.is_string()) schema_error(here + "/" + key, "expected string, found " + type_name(v));
    out[i] = v.get<std::string>();
  }
  for (const auto& [key, value] : section.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) schema_error(here + "/" + key, "unknown key");
}

}  // namespace

std::string_view body_part_key(BodyPart p) { return kActionKeys[static_cast<std::size_t>(p)]; }

std::string body_part_phrase(BodyPart p) {
  std::string s(body_part_key(p));
  std::replace(s.begin(), s.end(), '_', ' ');
  return s;
}

std::string_view source_name(ParseSource s) {
  switch (s) {
    case ParseSource::kFixture: return "fixture";
    case ParseSource::kMock: return "mock";
    case ParseSource::kLlm: return "llm";
  }
  return "?";
}

std::string normalize_prompt(std::string_view prompt) {
  std::string out;
  bool pending_space = false;
  for (char ch : prompt) {
    if (std::isspace(static_cast<unsigned char>(ch))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  }
  return out;
}

json to_json(const ParsedPrompt& p) {
  json action = json::object();
  json semantic = json::object();
  for (std::size_t i = 0; i < kActionSlots; ++i) action[std::string(kActionKeys[i])] = p.action[i];
  for (std::size_t i = 0; i < kSemanticSlots; ++i) semantic[std::string(kSemanticKeys[i])] = p.semantic[i];
  return json{{"prompt", p.prompt}, {"action", action}, {"semantic", semantic}};
}

ParsedPrompt parse_entry(const json& entry, ParseSource source, const std::string& pointer) {
  if (!entry.is_object()) schema_error(pointer, "expected object, found " + type_name(entry));
  ParsedPrompt p;
  p.source = source;
  if (!entry.contains("prompt")) schema_error(pointer + "/prompt", "missing key");
  if (!entry.at("prompt").is_string())
    schema_error(pointer + "/prompt", "expected string, found " + type_name(entry.at("prompt")));
  p.prompt = normalize_prompt(entry.at("prompt").get<std::string>());
  if (p.prompt.empty()) schema_error(pointer + "/prompt", "empty prompt");
  read_section(entry, "action", kActionKeys, p.action, pointer);
  read_section(entry, "semantic", kSemanticKeys, p.semantic, pointer);
  for (const auto& [key, value] : entry.items())
    if (key != "prompt" && key != "action" && key != "semantic") schema_error(pointer + "/" + key, "unknown key");
  return p;
}

ParsedPrompt validated(const ParsedPrompt& p) { return parse_entry(to_json(p), p.source); }

FixtureTable parse_fixtures(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw Error("semantic_parsing", "bad_json", e.what());
  }
  if (!doc.is_object()) schema_error("", "expected object, found " + type_name(doc));
  if (!doc.contains("version")) schema_error("/version", "missing key");
  if (!doc.at("version").is_number_integer() || doc.at("version").get<int>() != kSchemaVersion)
    schema_error("/version", "expected " + std::to_string(kSchemaVersion));
  if (!doc.contains("entries")) schema_error("/entries", "missing key");
  const json& entries = doc.at("entries");
  if (!entries.is_array()) schema_error("/entries", "expected array, found " + type_name(entries));
  for (const auto& [key, value] : doc.items())
    if (key != "version" && key != "entries") schema_error("/" + key, "unknown key");
  FixtureTable table;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const std::string pointer = "/entries/" + std::to_string(i);
    ParsedPrompt p = parse_entry(entries[i], ParseSource::kFixture, pointer);
    if (table.count(p.prompt))
      throw Error("semantic_parsing", "duplicate_prompt", pointer + "/prompt: duplicate prompt '" + p.prompt + "'");
    table.emplace(p.prompt, std::move(p));
  }
  return table;
}

FixtureTable load_fixtures(const std::string& path) { return parse_fixtures(read_file(path, "semantic_parsing")); }

std::string dump_fixtures(const FixtureTable& table) {
  json entries = json::array();
  for (const auto& [prompt, p] : table) entries.push_back(to_json(p));
  return json{{"version", kSchemaVersion}, {"entries", entries}}.dump(2) + "\n";
}

std::vector<std::string> flatten_parse(const ParsedPrompt& p) {
  std::vector<std::string> out;
  out.reserve(kSlotCount);
  for (const auto& s : p.action) out.push_back(s.empty() ? "none" : s);
  for (const auto& s : p.semantic) out.push_back(s.empty() ? "none" : s);
  return out;
}

}  // namespace fgt2m::semantic_parsing
