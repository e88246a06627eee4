// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/semantic_parsing/mock_parser.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"

namespace fgt2m::semantic_parsing {

using text_graph::DependencyGraph;
using text_graph::Token;
using B = BodyPart;

namespace {

const std::vector<std::pair<BodyPart, std::string>> kArmSwing = {{B::kLeftArm, "swinging with the stride"},
                                                                 {B::kRightArm, "swinging with the stride"}};

const std::map<std::string, std::string, std::less<>> kNounGloss = {
    {"person", "the human performing the motion"},
    {"arm", "an upper limb"},
    {"arms", "both upper limbs"},
    {"leg", "a lower limb"},
    {"legs", "both lower limbs"},
    {"head", "the top of the body"},
};
const std::map<std::string, std::string, std::less<>> kAdjGloss = {
    {"left", "on the left side of the body"},
    {"right", "on the right side of the body"},
};
const std::map<std::string, std::string, std::less<>> kAdvGloss = {
    {"slowly", "at a slow pace"},
    {"quickly", "at a fast pace"},
    {"forward", "toward the front"},
    {"backward", "toward the back"},
    {"high", "to an elevated height"},
    {"twice", "two repetitions"},
    {"around", "turning about the vertical axis"},
    {"sideways", "toward the side"},
};
const std::map<std::string, std::string, std::less<>> kQuantGloss = {
    {"both", "the left and right sides together"},
    {"twice", "the motion happens two times"},
};
const std::map<std::string, std::string, std::less<>> kConjGloss = {
    {"then", "the next action follows the previous one"},
    {"and", "the actions happen at the same time"},
};
const std::map<std::string, std::string, std::less<>> kPrepGloss = {
    {"with", "names the body part that performs the action"},
};
const std::map<std::string, std::string, std::less<>> kNumGloss = {
    {"two", "the count 2"},
    {"three", "the count 3"},
};

std::string gloss(const std::map<std::string, std::string, std::less<>>& table, const std::string& word) {
  auto it = table.find(word);
  return it == table.end() ? word : word + ": " + it->second;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

std::string part_with_article(BodyPart p) { return "the " + body_part_phrase(p); }

std::string fill(const std::string& tmpl, BodyPart p) {
  std::string out = tmpl;
  auto pos = out.find("{part}");
  if (pos != std::string::npos) out.replace(pos, 6, part_with_article(p));
  return out;
}

std::string count_word(int repeats) {
  switch (repeats) {
    case 2: return "two times";
    case 3: return "three times";
    default: return std::to_string(repeats) + " times";
  }
}

std::string modifiers(const ActionClause& c) {
  std::string s;
  for (const auto& a : c.adverbs) s += ", " + a;
  if (c.repeats > 1) s += ", " + count_word(c.repeats);
  return s;
}

// Limb class of a noun surface; nullopt for non-body nouns.
enum class Limb { kArm, kLeg, kHead, kTorso };
std::optional<Limb> limb_of(const std::string& noun) {
  static const std::map<std::string, Limb, std::less<>> table = {
      {"arm", Limb::kArm},   {"arms", Limb::kArm},   {"hand", Limb::kArm},   {"hands", Limb::kArm},
      {"leg", Limb::kLeg},   {"legs", Limb::kLeg},   {"foot", Limb::kLeg},   {"feet", Limb::kLeg},
      {"head", Limb::kHead}, {"torso", Limb::kTorso}, {"body", Limb::kTorso}, {"waist", Limb::kTorso}};
  auto it = table.find(noun);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

bool is_plural(const std::string& noun) { return noun.size() > 1 && noun.back() == 's'; }

std::size_t governing_verb(const DependencyGraph& g, std::size_t index) {
  std::size_t cur = g.token(index).head;
  while (cur != 0 && g.token(cur).upos != "VERB") cur = g.token(cur).head;
  return cur;
}

void add_parts(const DependencyGraph& g, std::size_t noun, std::vector<BodyPart>& parts) {
  auto limb = limb_of(lower(g.token(noun).surface));
  if (!limb) return;
  if (*limb == Limb::kHead || *limb == Limb::kTorso) {
    parts.push_back(*limb == Limb::kHead ? B::kHead : B::kTorso);
    return;
  }
  bool both = is_plural(lower(g.token(noun).surface));
  std::string side;
  for (std::size_t child : g.children(noun)) {
    std::string w = lower(g.token(child).surface);
    if (w == "both") both = true;
    if (w == "left" || w == "right") side = w;
  }
  const bool arm = *limb == Limb::kArm;
  auto left = arm ? B::kLeftArm : B::kLeftLeg;
  auto right = arm ? B::kRightArm : B::kRightLeg;
  if (both && side.empty()) {
    parts.push_back(left);
    parts.push_back(right);
  } else {
    parts.push_back(side == "left" ? left : right);
  }
}

std::string join(const std::vector<std::string>& items, const std::string& sep) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) out += (i ? sep : "") + items[i];
  return out;
}

}  // namespace

const std::vector<VerbRule>& verb_rules() {
  static const std::vector<VerbRule> rules = {
      {"walks", "walk", {B::kLeftLeg, B::kRightLeg}, "stepping with {part} in a walking gait",
       {kArmSwing[0], kArmSwing[1], {B::kTorso, "travelling with the steps"}}, "walk: move on foot at an easy pace",
       PartPhrase::kNone},
      {"runs", "run", {B::kLeftLeg, B::kRightLeg}, "striding with {part} in a running gait",
       {{B::kLeftArm, "pumping with the stride"}, {B::kRightArm, "pumping with the stride"},
        {B::kTorso, "leaning into the run"}},
       "run: move on foot at a fast pace", PartPhrase::kNone},
      {"jumps", "jump", {B::kLeftLeg, B::kRightLeg}, "bending then pushing off with {part}",
       {{B::kLeftArm, "swinging upward for momentum"}, {B::kRightArm, "swinging upward for momentum"},
        {B::kTorso, "rising off the ground"}},
       "jump: push off the ground and land again", PartPhrase::kNone},
      {"kicks", "kick", {B::kRightLeg}, "lifting {part} up and out in a kick", {},
       "kick: strike out with a leg", PartPhrase::kWith},
      {"waves", "wave", {B::kRightArm}, "raising {part} and swinging the hand side to side", {},
       "wave: move a raised hand back and forth", PartPhrase::kObject},
      {"raises", "raise", {B::kRightArm}, "lifting {part} upward", {}, "raise: move a limb to a higher position",
       PartPhrase::kObject},
      {"punches", "punch", {B::kRightArm}, "thrusting {part} forward in a punch", {},
       "punch: strike forward with a fist", PartPhrase::kWith},
      {"squats", "squat", {B::kLeftLeg, B::kRightLeg}, "bending {part} to lower the body",
       {{B::kLeftArm, "reaching forward for balance"}, {B::kRightArm, "reaching forward for balance"},
        {B::kTorso, "lowering toward the ground"}},
       "squat: bend the knees to crouch down", PartPhrase::kNone},
      {"turns", "turn", {B::kTorso}, "rotating {part} about the vertical axis",
       {{B::kLeftLeg, "stepping to pivot"}, {B::kRightLeg, "stepping to pivot"}},
       "turn: change the facing direction", PartPhrase::kNone},
      {"nods", "nod", {B::kHead}, "tilting {part} down and up", {}, "nod: bob the head as a sign", PartPhrase::kNone},
      {"bends", "bend", {B::kTorso}, "bending {part} forward", {}, "bend: curve a part of the body",
       PartPhrase::kObject},
      {"claps", "clap", {B::kLeftArm, B::kRightArm}, "swinging {part} inward to clap the hands", {},
       "clap: strike the palms together", PartPhrase::kNone},
      {"stretches", "stretch", {B::kLeftArm, B::kRightArm}, "extending {part} outward", {},
       "stretch: extend limbs to full length", PartPhrase::kObject},
      {"steps", "step", {B::kRightLeg}, "taking a step with {part}", {{B::kTorso, "shifting the body weight"}},
       "step: move one foot to a new place", PartPhrase::kWith},
  };
  return rules;
}

const VerbRule* find_rule(std::string_view verb) {
  for (const auto& r : verb_rules())
    if (r.verb == verb) return &r;
  return nullptr;
}

std::string idle_phrase(BodyPart p) {
  switch (p) {
    case B::kLeftArm:
    case B::kRightArm: return "resting at side";
    case B::kLeftLeg:
    case B::kRightLeg: return "stabilizing stance";
    case B::kHead: return "facing forward";
    case B::kTorso: return "upright";
  }
  return "";
}

nlohmann::json rule_table_json() {
  nlohmann::json verbs = nlohmann::json::array();
  for (const auto& r : verb_rules()) {
    nlohmann::json defaults = nlohmann::json::array();
    for (auto p : r.default_parts) defaults.push_back(body_part_key(p));
    nlohmann::json secondary = nlohmann::json::object();
    for (const auto& [p, text] : r.secondary) secondary[std::string(body_part_key(p))] = text;
    verbs.push_back({{"verb", r.verb},
                     {"lemma", r.lemma},
                     {"default_parts", defaults},
                     {"template", r.part_template},
                     {"secondary", secondary},
                     {"clarification", r.clarification},
                     {"phrase", static_cast<int>(r.phrase)}});
  }
  nlohmann::json idle = nlohmann::json::object();
  for (auto p : kBodyParts) idle[std::string(body_part_key(p))] = idle_phrase(p);
  return {{"version", kRuleTableVersion}, {"verbs", verbs}, {"idle", idle}};
}

const std::string& rule_table_hash() {
  static const std::string hash = sha256_hex(rule_table_json().dump());
  return hash;
}

std::vector<BodyPart> active_parts(const ActionClause& c) {
  if (!c.parts.empty()) return c.parts;
  const VerbRule* r = find_rule(c.verb);
  return r ? r->default_parts : std::vector<BodyPart>{};
}

std::optional<std::vector<ActionClause>> extract_clauses(const DependencyGraph& g) {
  std::vector<ActionClause> clauses;
  std::map<std::size_t, std::size_t> clause_of;
  for (const Token& t : g.tokens()) {
    if (t.upos != "VERB") continue;
    ActionClause c;
    c.verb = lower(t.surface);
    if (!find_rule(c.verb)) return std::nullopt;
    for (std::size_t child : g.children(t.index)) {
      const Token& ch = g.token(child);
      if (ch.deprel == "cc" && lower(ch.surface) == "and") c.conj = Conj::kAnd;
    }
    clause_of[t.index] = clauses.size();
    clauses.push_back(std::move(c));
  }
  if (clauses.empty()) return std::nullopt;
  for (const Token& t : g.tokens()) {
    if (t.upos == "VERB") continue;
    std::size_t verb = governing_verb(g, t.index);
    if (verb == 0) continue;
    ActionClause& c = clauses[clause_of.at(verb)];
    const std::string w = lower(t.surface);
    const bool direct = t.head == verb;
    if (t.upos == "ADV" && direct) {
      if (w == "twice") {
        c.repeats = 2;
      } else {
        c.adverbs.push_back(w);
      }
    } else if (t.upos == "NUM" && !direct && lower(g.token(t.head).surface) == "times") {
      c.repeats = w == "two" ? 2 : w == "three" ? 3 : 1;
    } else if (t.upos == "NOUN" && direct && (t.deprel == "obj" || t.deprel == "obl")) {
      add_parts(g, t.index, c.parts);
    }
  }
  return clauses;
}

std::string render_prompt(const std::vector<ActionClause>& clauses) {
  std::string out = "a person";
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    const ActionClause& c = clauses[i];
    const VerbRule* rule = find_rule(c.verb);
    if (!rule) throw Error("semantic_parsing", "unknown_verb", "no rule for verb '" + c.verb + "'");
    if (i > 0) out += c.conj == Conj::kAnd ? " and" : " then";
    out += " " + c.verb;
    if (!c.parts.empty()) {
      std::string phrase;
      std::set<BodyPart> set(c.parts.begin(), c.parts.end());
      if (set == std::set<BodyPart>{B::kLeftArm, B::kRightArm}) {
        phrase = "both arms";
      } else if (set == std::set<BodyPart>{B::kLeftLeg, B::kRightLeg}) {
        phrase = "both legs";
      } else if (set.size() == 1) {
        phrase = part_with_article(*set.begin());
      } else {
        throw Error("semantic_parsing", "unrenderable", "clause parts have no grammar phrase");
      }
      if (set.count(B::kTorso)) throw Error("semantic_parsing", "unrenderable", "torso is not a grammar object");
      out += (rule->phrase == PartPhrase::kWith ? " with " : " ") + phrase;
    }
    for (const auto& a : c.adverbs) out += " " + a;
    if (c.repeats == 2) out += " twice";
    if (c.repeats == 3) out += " three times";
  }
  return out;
}

void describe_actions(const std::vector<ActionClause>& clauses, ParsedPrompt& out) {
  std::vector<std::string> verb_notes;
  for (auto p : kBodyParts) {
    std::vector<std::string> per_clause;
    bool any = false;
    for (const auto& c : clauses) {
      const VerbRule* rule = find_rule(c.verb);
      auto parts = active_parts(c);
      std::string d;
      if (std::find(parts.begin(), parts.end(), p) != parts.end()) {
        d = fill(rule->part_template, p) + modifiers(c);
      } else if (c.parts.empty()) {
        for (const auto& [sp, text] : rule->secondary)
          if (sp == p) d = text;
      }
      any = any || !d.empty();
      per_clause.push_back(d.empty() ? idle_phrase(p) : d);
    }
    if (!any) {
      out.part(p) = idle_phrase(p);
      continue;
    }
    std::string joined = per_clause[0];
    for (std::size_t i = 1; i < per_clause.size(); ++i)
      joined += (clauses[i].conj == Conj::kAnd ? ", while " : ", then ") + per_clause[i];
    out.part(p) = joined;
  }
  std::string verbs;
  for (std::size_t i = 0; i < clauses.size(); ++i) {
    if (i > 0) verbs += clauses[i].conj == Conj::kAnd ? "; while " : "; then ";
    verbs += find_rule(clauses[i].verb)->clarification + modifiers(clauses[i]);
  }
  out.action[kVerbSlot] = verbs;
}

void describe_semantics(const DependencyGraph& g, ParsedPrompt& out) {
  std::array<std::vector<std::string>, kSemanticSlots> buckets;
  auto add = [&](std::size_t slot, std::string text) {
    auto& b = buckets[slot];
    if (std::find(b.begin(), b.end(), text) == b.end()) b.push_back(std::move(text));
  };
  for (const Token& t : g.tokens()) {
    const std::string w = lower(t.surface);
    if (t.upos == "NOUN" && w != "times") add(0, gloss(kNounGloss, w));
    if (t.upos == "ADJ") add(1, gloss(kAdjGloss, w));
    if (t.upos == "ADV") add(2, gloss(kAdvGloss, w));
    if (kQuantGloss.count(w)) add(3, gloss(kQuantGloss, w));
    if (t.upos == "CCONJ") add(4, gloss(kConjGloss, w));
    if (t.upos == "ADP") add(5, gloss(kPrepGloss, w));
    if (t.upos == "PRON") add(6, w);
    if (t.upos == "NUM") add(7, gloss(kNumGloss, w));
  }
  for (std::size_t i = 0; i < kSemanticSlots; ++i) out.semantic[i] = join(buckets[i], "; ");
}

ParsedPrompt mock_parse(std::string_view prompt, const DependencyGraph& g) {
  ParsedPrompt p;
  p.prompt = normalize_prompt(prompt);
  p.source = ParseSource::kMock;
  auto clauses = extract_clauses(g);
  if (clauses) {
    describe_actions(*clauses, p);
  } else {
    p.action.fill("unspecified");
  }
  describe_semantics(g, p);
  return validated(p);
}

}  // namespace fgt2m::semantic_parsing
