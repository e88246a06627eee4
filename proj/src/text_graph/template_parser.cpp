// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/text_graph/template_parser.hpp"

#include <algorithm>
#include <optional>

#include "fgt2m/common/error.hpp"

namespace fgt2m::text_graph {

namespace {

bool in(const std::vector<std::string>& set, const std::string& w) {
  return std::find(set.begin(), set.end(), w) != set.end();
}

class Parser {
 public:
  Parser(std::vector<std::string> words, const Lexicon& lex) : words_(std::move(words)), lex_(lex) {}

  DependencyGraph run() {
    expect_word("prompt", "a", "DET");
    std::size_t subject = expect_word("prompt", "person", "NOUN");
    attach(1, subject, "det");
    std::size_t verb = clause("clause");
    attach(subject, verb, "nsubj");
    root_ = verb;
    tokens_[verb - 1].head = 0;
    tokens_[verb - 1].deprel = "root";
    while (peek_in(lex_.conjunctions)) {
      std::size_t cc = take("CCONJ");
      std::size_t next = clause("conjunct");
      attach(cc, next, "cc");
      attach(next, verb, "conj");
      verb = next;
    }
    if (peek() && *peek() == ".") attach(take("PUNCT"), root_, "punct");
    if (peek()) fail("prompt", "end of prompt");
    return DependencyGraph(std::move(tokens_));
  }

 private:
  std::size_t clause(const char* production) {
    if (!peek_in(lex_.verbs)) fail(production, "a verb");
    std::size_t verb = take("VERB");
    if (peek_in(lex_.determiners) || peek_in(lex_.quantifiers)) attach(object("object phrase"), verb, "obj");
    if (peek() && *peek() == "with") {
      std::size_t with = take("ADP");
      std::size_t noun = object("with phrase");
      attach(with, noun, "case");
      attach(noun, verb, "obl");
    }
    while (true) {
      if (peek_in(lex_.adverbs)) {
        attach(take("ADV"), verb, "advmod");
      } else if (peek_in(lex_.numerals)) {
        std::size_t num = take("NUM");
        std::size_t times = expect_word("count phrase", "times", "NOUN");
        attach(num, times, "nummod");
        attach(times, verb, "obl:npmod");
      } else {
        break;
      }
    }
    return verb;
  }

  std::size_t object(const char* production) {
    if (peek() && *peek() == "both") {
      std::size_t det = take("DET");
      if (!peek_in(lex_.plural_nouns)) fail(production, "a plural body part (arms, legs)");
      std::size_t noun = take("NOUN");
      attach(det, noun, "det");
      return noun;
    }
    if (!(peek() && *peek() == "the")) fail(production, "'the' or 'both'");
    std::size_t det = take("DET");
    std::optional<std::size_t> side;
    if (peek_in(lex_.sides)) side = take("ADJ");
    if (!peek_in(lex_.body_nouns)) fail(production, "a body part (arm, leg, head)");
    std::size_t noun = take("NOUN");
    attach(det, noun, "det");
    if (side) attach(*side, noun, "amod");
    return noun;
  }

  const std::string* peek() const { return pos_ < words_.size() ? &words_[pos_] : nullptr; }
  bool peek_in(const std::vector<std::string>& set) const { return peek() && in(set, *peek()); }

  std::size_t take(const char* upos) {
    Token t;
    t.index = tokens_.size() + 1;
    t.surface = words_[pos_++];
    t.upos = upos;
    tokens_.push_back(std::move(t));
    return tokens_.size();
  }

  std::size_t expect_word(const char* production, const char* word, const char* upos) {
    if (!(peek() && *peek() == word)) fail(production, std::string("'") + word + "'");
    return take(upos);
  }

  void attach(std::size_t dependent, std::size_t head, const char* deprel) {
    tokens_[dependent - 1].head = head;
    tokens_[dependent - 1].deprel = deprel;
  }

  [[noreturn]] void fail(const char* production, const std::string& wanted) const {
    std::string found = peek() ? "'" + *peek() + "'" : "end of input";
    throw Error("text_graph", "outside_grammar",
                std::string(production) + ": expected " + wanted + " at token " + std::to_string(pos_ + 1) +
                    ", found " + found);
  }

  std::vector<std::string> words_;
  const Lexicon& lex_;
  std::size_t pos_ = 0;
  std::size_t root_ = 0;
  std::vector<Token> tokens_;
};

}  // namespace

std::vector<std::string> Lexicon::words() const {
  std::vector<std::string> all;
  for (const auto* set : {&determiners, &quantifiers, &subject, &body_nouns, &plural_nouns, &sides, &verbs, &adverbs,
                          &numerals, &conjunctions, &other})
    all.insert(all.end(), set->begin(), set->end());
  std::sort(all.begin(), all.end());
  return all;
}

std::string Lexicon::upos(const std::string& word) const {
  if (in(determiners, word) || in(quantifiers, word)) return "DET";
  if (in(subject, word) || in(body_nouns, word) || in(plural_nouns, word) || word == "times") return "NOUN";
  if (in(sides, word)) return "ADJ";
  if (in(verbs, word)) return "VERB";
  if (in(adverbs, word)) return "ADV";
  if (in(numerals, word)) return "NUM";
  if (in(conjunctions, word)) return "CCONJ";
  if (word == "with") return "ADP";
  if (word == ".") return "PUNCT";
  return "X";
}

const Lexicon& template_lexicon() {
  static const Lexicon lex{
      .determiners = {"a", "the"},
      .quantifiers = {"both"},
      .subject = {"person"},
      .body_nouns = {"arm", "leg", "head"},
      .plural_nouns = {"arms", "legs"},
      .sides = {"left", "right"},
      .verbs = {"walks", "runs", "jumps", "kicks", "waves", "raises", "punches", "squats", "turns", "nods", "bends",
                "claps", "stretches", "steps"},
      .adverbs = {"slowly", "quickly", "forward", "backward", "high", "twice", "around", "sideways"},
      .numerals = {"two", "three"},
      .conjunctions = {"then", "and"},
      .other = {"with", "times", "."},
  };
  return lex;
}

DependencyGraph parse_template(std::string_view prompt) {
  const Lexicon& lex = template_lexicon();
  auto words = tokenize(prompt);
  auto vocab = lex.words();
  for (std::size_t i = 0; i < words.size(); ++i)
    if (!std::binary_search(vocab.begin(), vocab.end(), words[i]))
      throw Error("text_graph", "outside_grammar",
                  "lexicon: unknown word '" + words[i] + "' at token " + std::to_string(i + 1));
  return Parser(std::move(words), lex).run();
}

}  // namespace fgt2m::text_graph
