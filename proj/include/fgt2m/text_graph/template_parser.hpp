// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::text_graph {

/// Word classes of the closed prompt grammar (docs/grammar.md).
struct Lexicon {
  std::vector<std::string> determiners;   // a the
  std::vector<std::string> quantifiers;   // both
  std::vector<std::string> subject;       // person
  std::vector<std::string> body_nouns;    // arm leg head
  std::vector<std::string> plural_nouns;  // arms legs
  std::vector<std::string> sides;         // left right
  std::vector<std::string> verbs;         // third person singular forms
  std::vector<std::string> adverbs;
  std::vector<std::string> numerals;
  std::vector<std::string> conjunctions;  // then and
  std::vector<std::string> other;         // with times .

  /// All 40 words, sorted.
  std::vector<std::string> words() const;
  std::string upos(const std::string& word) const;
};

const Lexicon& template_lexicon();

/// Parses a prompt of the closed grammar into its deterministic dependency
/// tree. Anything outside the grammar is an error naming the failed production.
DependencyGraph parse_template(std::string_view prompt);

}  // namespace fgt2m::text_graph
