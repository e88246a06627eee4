// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"
#include "fgt2m/numerics/random.hpp"
#include "fgt2m/text_graph/conllu.hpp"
#include "fgt2m/text_graph/dependency_graph.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::text_graph {
namespace {

using Layers = std::map<std::size_t, std::vector<std::size_t>>;

std::string data_file(const std::string& rel) { return read_file(std::string(FGT2M_SOURCE_DIR) + "/" + rel, "test"); }

std::vector<Token> chain(std::size_t n) {
  std::vector<Token> t;
  for (std::size_t i = 1; i <= n; ++i) t.push_back({i, "w" + std::to_string(i), "X", i - 1, i == 1 ? "root" : "dep"});
  return t;
}

std::string error_message(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() + ": " + e.what();
  }
  return "";
}

TEST(DependencyGraph, RejectsNonTrees) {
  EXPECT_THROW(DependencyGraph({}), Error);
  EXPECT_THROW(DependencyGraph({{1, "a", "X", 1, "x"}}), Error);
  EXPECT_THROW(DependencyGraph({{1, "a", "X", 0, "root"}, {2, "b", "X", 0, "root"}}), Error);
  EXPECT_THROW(DependencyGraph({{1, "a", "X", 2, "x"}, {2, "b", "X", 1, "x"}}), Error);
  EXPECT_THROW(DependencyGraph({{1, "a", "X", 0, "root"}, {2, "b", "X", 3, "x"}, {3, "c", "X", 2, "x"}}), Error);
  EXPECT_THROW(DependencyGraph({{1, "a", "X", 0, "root"}, {2, "b", "X", 5, "x"}}), Error);
}

TEST(Conllu, GoldenFixtureSentence) {
  auto graphs = parse_conllu(data_file("tests/data/golden.conllu"));
  ASSERT_EQ(graphs.size(), 20u);
  const DependencyGraph& g = graphs[0];
  EXPECT_EQ(g.surfaces(), (std::vector<std::string>{"A", "person", "walks", "."}));
  std::vector<std::size_t> heads;
  for (const Token& t : g.tokens()) heads.push_back(t.head);
  EXPECT_EQ(heads, (std::vector<std::size_t>{2, 3, 0, 3}));
  EXPECT_EQ(g.root(), 3u);
  EXPECT_EQ(g.token(g.root()).surface, "walks");
  EXPECT_EQ(g.edges().size(), 3u);
}

TEST(Conllu, EmptyInput) {
  EXPECT_TRUE(parse_conllu("").empty());
  EXPECT_TRUE(parse_conllu("# only a comment\n\n").empty());
}

TEST(Conllu, SkipsRangesAndEmptyNodes) {
  auto graphs = parse_conllu(data_file("tests/data/golden.conllu"));
  const DependencyGraph& g = graphs[18];
  EXPECT_EQ(g.size(), 7u);
  EXPECT_EQ(g.token(3).surface, "ca");
  auto with_empty = parse_conllu("1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n1.1\tgone\t_\tVERB\t_\t_\t_\t_\t_\t_\n");
  ASSERT_EQ(with_empty.size(), 1u);
  EXPECT_EQ(with_empty[0].size(), 1u);
}

TEST(Conllu, ErrorsNameTheLine) {
  const std::string two_roots =
      "# two roots\n"
      "1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\tstop\t_\tVERB\t_\t_\t0\troot\t_\t_\n";
  std::string msg = error_message([&] { parse_conllu(two_roots); });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
  EXPECT_NE(msg.find("multi_root"), std::string::npos) << msg;

  msg = error_message([] { parse_conllu("1\tgo\t_\tVERB\t_\t_\t0\troot\t_\n"); });
  EXPECT_NE(msg.find("line 1"), std::string::npos) << msg;
  EXPECT_NE(msg.find("column_count"), std::string::npos) << msg;

  msg = error_message([] { parse_conllu("1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n2\tx\t_\tX\t_\t_\tone\tdep\t_\t_\n"); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("bad_head"), std::string::npos) << msg;

  const std::string cyclic =
      "1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
      "2\ta\t_\tX\t_\t_\t3\tdep\t_\t_\n"
      "3\tb\t_\tX\t_\t_\t2\tdep\t_\t_\n";
  msg = error_message([&] { parse_conllu(cyclic); });
  EXPECT_NE(msg.find("line 2"), std::string::npos) << msg;
  EXPECT_NE(msg.find("cycle"), std::string::npos) << msg;
}

TEST(Conllu, RoundTripOnConsumedColumns) {
  auto graphs = parse_conllu(data_file("tests/data/golden.conllu"));
  auto again = parse_conllu(serialize_conllu(graphs));
  EXPECT_EQ(again, graphs);
  EXPECT_EQ(serialize_conllu(again), serialize_conllu(graphs));
}

TEST(DepthLayers, Examples) {
  EXPECT_EQ(depth_layers(DependencyGraph(chain(1))), (Layers{{0, {1}}}));
  Layers expected;
  for (std::size_t d = 0; d < 6; ++d) expected[d] = {d + 1};
  EXPECT_EQ(depth_layers(DependencyGraph(chain(6))), expected);
  auto g = parse_conllu(data_file("tests/data/golden.conllu"))[0];
  EXPECT_EQ(depth_layers(g), (Layers{{0, {3}}, {1, {2, 4}}, {2, {1}}}));
}

TEST(DepthLayers, PartitionsEveryGoldenSentence) {
  for (const auto& g : parse_conllu(data_file("tests/data/golden.conllu"))) {
    std::vector<std::size_t> seen;
    for (const auto& [depth, nodes] : depth_layers(g)) seen.insert(seen.end(), nodes.begin(), nodes.end());
    std::sort(seen.begin(), seen.end());
    ASSERT_EQ(seen.size(), g.size());
    for (std::size_t i = 0; i < seen.size(); ++i) EXPECT_EQ(seen[i], i + 1);
  }
}

TEST(Adjacency, Modes) {
  auto self = adjacency(DependencyGraph(chain(1)), AdjacencyMode::kSymmetricSelfLoops);
  EXPECT_EQ(self, numerics::Tensor::matrix({{1.0}}));

  auto g = parse_conllu(data_file("tests/data/golden.conllu"))[0];
  auto directed = adjacency(g, AdjacencyMode::kDirected);
  double out_degree_walks = 0;
  for (std::size_t j = 0; j < 4; ++j) out_degree_walks += directed(2, j);
  EXPECT_EQ(out_degree_walks, 2.0);
  EXPECT_EQ(directed(2, 1), 1.0);
  EXPECT_EQ(directed(2, 3), 1.0);
  EXPECT_EQ(directed(1, 2), 0.0);

  for (const auto& sent : parse_conllu(data_file("tests/data/golden.conllu"))) {
    auto sym = adjacency(sent, AdjacencyMode::kSymmetric);
    auto loops = adjacency(sent, AdjacencyMode::kSymmetricSelfLoops);
    double total = 0;
    for (std::size_t i = 0; i < sent.size(); ++i) {
      EXPECT_EQ(sym(i, i), 0.0);
      EXPECT_EQ(loops(i, i), 1.0);
      for (std::size_t j = 0; j < sent.size(); ++j) {
        EXPECT_EQ(sym(i, j), sym(j, i));
        total += sym(i, j);
      }
    }
    EXPECT_EQ(total, 2.0 * (sent.size() - 1));
  }
}

TEST(Template, GoldenParses) {
  std::istringstream in(data_file("tests/data/template_golden.conllu"));
  std::vector<std::string> prompts;
  for (std::string line; std::getline(in, line);)
    if (line.rfind("# prompt = ", 0) == 0) prompts.push_back(line.substr(11));
  auto golden = parse_conllu(data_file("tests/data/template_golden.conllu"));
  ASSERT_EQ(prompts.size(), golden.size());
  ASSERT_GE(prompts.size(), 6u);
  for (std::size_t i = 0; i < prompts.size(); ++i) EXPECT_EQ(parse_template(prompts[i]), golden[i]) << prompts[i];
}

TEST(Template, WalksExample) {
  auto g = parse_template("a person walks");
  EXPECT_EQ(g.token(g.root()).surface, "walks");
  EXPECT_EQ(g.children(g.root()), (std::vector<std::size_t>{2}));
  EXPECT_EQ(g.token(2).surface, "person");
  EXPECT_EQ(g.children(2), (std::vector<std::size_t>{1}));

  auto chained = parse_template("a person walks then jumps");
  EXPECT_EQ(chained.token(5).surface, "jumps");
  EXPECT_EQ(chained.token(5).head, 3u);
  EXPECT_EQ(chained.token(5).deprel, "conj");
}

TEST(Template, CaseAndTrailingPeriod) {
  EXPECT_EQ(parse_template("A person walks."), parse_template("a person walks ."));
}

TEST(Template, OutsideGrammarNamesProduction) {
  EXPECT_THROW(parse_template(""), Error);
  std::string msg = error_message([] { parse_template("a person quickly"); });
  EXPECT_NE(msg.find("clause"), std::string::npos) << msg;
  EXPECT_NE(msg.find("token 3"), std::string::npos) << msg;
  msg = error_message([] { parse_template("a person walks with arms"); });
  EXPECT_NE(msg.find("with phrase"), std::string::npos) << msg;
  msg = error_message([] { parse_template("a person dances"); });
  EXPECT_NE(msg.find("unknown word 'dances'"), std::string::npos) << msg;
  msg = error_message([] { parse_template("a person walks then"); });
  EXPECT_NE(msg.find("conjunct"), std::string::npos) << msg;
  msg = error_message([] { parse_template("a person walks . jumps"); });
  EXPECT_NE(msg.find("end of prompt"), std::string::npos) << msg;
  EXPECT_THROW(parse_template("a person waves two"), Error);
}

TEST(Template, LexiconMatchesCommittedFile) {
  std::istringstream in(data_file("data/lexicon.txt"));
  std::vector<std::string> committed;
  for (std::string w; std::getline(in, w);)
    if (!w.empty()) committed.push_back(w);
  EXPECT_EQ(committed.size(), 40u);
  EXPECT_EQ(template_lexicon().words(), committed);
}

// Independent sampler over the grammar in docs/grammar.md.
std::string sample_prompt(numerics::Rng& rng) {
  const Lexicon& lex = template_lexicon();
  auto pick = [&](const std::vector<std::string>& v) { return v[rng.index(v.size())]; };
  auto object = [&]() -> std::string {
    if (rng.bernoulli(0.3)) return "both " + pick(lex.plural_nouns);
    std::string s = "the ";
    if (rng.bernoulli(0.5)) s += pick(lex.sides) + " ";
    return s + pick(lex.body_nouns);
  };
  auto clause = [&]() {
    std::string s = pick(lex.verbs);
    if (rng.bernoulli(0.5)) s += " " + object();
    if (rng.bernoulli(0.3)) s += " with " + object();
    for (std::size_t n = rng.index(3); n > 0; --n)
      s += " " + (rng.bernoulli(0.7) ? pick(lex.adverbs) : pick(lex.numerals) + " times");
    return s;
  };
  std::string p = "a person " + clause();
  for (std::size_t n = rng.index(3); n > 0; --n) p += " " + pick(lex.conjunctions) + " " + clause();
  if (rng.bernoulli(0.5)) p += " .";
  return p;
}

TEST(Template, SampledPromptsAreValidTrees) {
  numerics::Rng rng(2024);
  std::set<std::string> verbs(template_lexicon().verbs.begin(), template_lexicon().verbs.end());
  for (int i = 0; i < 1000; ++i) {
    std::string prompt = sample_prompt(rng);
    DependencyGraph g = parse_template(prompt);
    EXPECT_TRUE(check_tree(g.tokens()).empty()) << prompt;
    EXPECT_EQ(g.edges().size(), g.size() - 1) << prompt;
    EXPECT_EQ(g.size(), tokenize(prompt).size()) << prompt;
    EXPECT_TRUE(verbs.count(g.token(g.root()).surface)) << prompt;
    std::size_t covered = 0;
    for (const auto& [d, nodes] : depth_layers(g)) covered += nodes.size();
    EXPECT_EQ(covered, g.size()) << prompt;
    EXPECT_EQ(parse_conllu(serialize_conllu({g})).front(), g) << prompt;
  }
}

}  // namespace
}  // namespace fgt2m::text_graph
