// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_graph/conllu.hpp"

#include <charconv>

#include "fgt2m/common/error.hpp"

namespace fgt2m::text_graph {

namespace {

std::vector<std::string_view> split_tabs(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    std::size_t tab = line.find('\t', start);
    if (tab == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, tab - start));
    start = tab + 1;
  }
}

bool parse_index(std::string_view s, std::size_t& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

struct PendingSentence {
  std::vector<Token> tokens;
  std::vector<std::size_t> lines;

  void flush(std::vector<DependencyGraph>& out) {
    if (tokens.empty()) return;
    auto violations = check_tree(tokens);
    if (!violations.empty()) {
      const TreeViolation& v = violations.front();
      std::size_t line = v.token > 0 ? lines[v.token - 1] : lines.front();
      throw Error("text_graph", v.code, "line " + std::to_string(line) + ": " + v.message);
    }
    out.emplace_back(std::move(tokens));
    tokens.clear();
    lines.clear();
  }
};

}  // namespace

std::vector<DependencyGraph> parse_conllu(std::string_view text) {
  std::vector<DependencyGraph> out;
  PendingSentence pending;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    if (line.empty()) {
      pending.flush(out);
      continue;
    }
    if (line.front() == '#') continue;
    auto cols = split_tabs(line);
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (cols.size() != 10)
      throw Error("text_graph", "column_count", where + "expected 10 columns, found " + std::to_string(cols.size()));
    if (cols[0].find_first_of("-.") != std::string_view::npos) continue;
    Token t;
    if (!parse_index(cols[0], t.index)) throw Error("text_graph", "bad_id", where + "non-integer ID '" + std::string(cols[0]) + "'");
    if (!parse_index(cols[6], t.head))
      throw Error("text_graph", "bad_head", where + "non-integer HEAD '" + std::string(cols[6]) + "'");
    t.surface = cols[1];
    t.upos = cols[3];
    t.deprel = cols[7];
    pending.tokens.push_back(std::move(t));
    pending.lines.push_back(line_no);
  }
  pending.flush(out);
  return out;
}

std::string serialize_conllu(const std::vector<DependencyGraph>& graphs) {
  std::string out;
  for (const DependencyGraph& g : graphs) {
    out += "# text = " + g.text() + "\n";
    for (const Token& t : g.tokens()) {
      out += std::to_string(t.index) + '\t' + t.surface + "\t_\t" + t.upos + "\t_\t_\t" + std::to_string(t.head) + '\t' +
             t.deprel + "\t_\t_\n";
    }
    out += '\n';
  }
  return out;
}

}  // namespace fgt2m::text_graph
