// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/semantic_parsing/parsed_prompt.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::semantic_parsing {

enum class Conj { kThen, kAnd };

/// One verb with its arguments. The synthetic corpus is generated from lists
/// of these, and the mock parser recovers them from a dependency tree.
struct ActionClause {
  std::string verb;                  // surface form, e.g. "kicks"
  std::vector<BodyPart> parts;       // explicit parts; empty means the verb's default
  std::vector<std::string> adverbs;  // in prompt order, count words excluded
  int repeats = 0;                   // 0 when no count is given
  Conj conj = Conj::kThen;           // link to the previous clause

  friend bool operator==(const ActionClause&, const ActionClause&) = default;
};

enum class PartPhrase { kNone, kObject, kWith };

struct VerbRule {
  std::string verb;
  std::string lemma;
  std::vector<BodyPart> default_parts;
  std::string part_template;  // "{part}" becomes e.g. "the right arm"
  std::vector<std::pair<BodyPart, std::string>> secondary;
  std::string clarification;
  PartPhrase phrase;
};

inline constexpr int kRuleTableVersion = 1;

const std::vector<VerbRule>& verb_rules();
const VerbRule* find_rule(std::string_view verb);
std::string idle_phrase(BodyPart p);

nlohmann::json rule_table_json();
/// SHA-256 of the canonical rule table dump; mock output is a function of
/// (prompt, this hash).
const std::string& rule_table_hash();

/// Parts the clause moves: explicit parts if any, otherwise the verb default.
std::vector<BodyPart> active_parts(const ActionClause& c);

/// nullopt when the tree has no verb or a verb outside the rule table.
std::optional<std::vector<ActionClause>> extract_clauses(const text_graph::DependencyGraph& g);

/// Grammar sentence for the clauses, e.g. "a person kicks with the left leg twice".
std::string render_prompt(const std::vector<ActionClause>& clauses);

/// Fills the 7 action slots from clauses.
void describe_actions(const std::vector<ActionClause>& clauses, ParsedPrompt& out);
/// Fills the 8 semantic slots from the tree's UPOS tags.
void describe_semantics(const text_graph::DependencyGraph& g, ParsedPrompt& out);

/// Deterministic stand-in for LLM parsing. Never fails on unknown verbs; the
/// action slots then read "unspecified".
ParsedPrompt mock_parse(std::string_view prompt, const text_graph::DependencyGraph& g);

}  // namespace fgt2m::semantic_parsing
