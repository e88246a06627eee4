// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "fgt2m/text_graph/dependency_graph.hpp"

namespace fgt2m::text_graph {

/// Reads CoNLL-U. Only ID, FORM, UPOS, HEAD and DEPREL are consumed; multi-word
/// ranges ("1-2") and empty nodes ("1.1") are skipped. Errors name the line.
std::vector<DependencyGraph> parse_conllu(std::string_view text);

/// Writes the consumed columns back; every other column is "_".
std::string serialize_conllu(const std::vector<DependencyGraph>& graphs);

}  // namespace fgt2m::text_graph
