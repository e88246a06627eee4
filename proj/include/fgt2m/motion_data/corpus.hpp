// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/motion_data/motion.hpp"
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"

namespace fgt2m::motion_data {

struct CorpusEntry {
  std::string id;
  std::string prompt;
  std::string file;       // relative to the corpus directory
  std::string parse_key;  // key into parses.json
  std::string split;      // "train" or "test"

  friend bool operator==(const CorpusEntry&, const CorpusEntry&) = default;
};

struct CorpusManifest {
  int version = 1;
  std::uint64_t seed = 0;
  std::size_t joints = kToyJoints;
  std::size_t frames = 40;
  double fps = 20.0;
  std::vector<CorpusEntry> entries;

  nlohmann::json to_json() const;
  static CorpusManifest from_json(const nlohmann::json& j);

  friend bool operator==(const CorpusManifest&, const CorpusManifest&) = default;
};

struct Corpus {
  CorpusManifest manifest;
  std::vector<MotionSequence> motions;  // parallel to manifest.entries
  semantic_parsing::FixtureTable parses;
  NormStats stats;  // computed on the train split

  std::vector<std::size_t> indices(const std::string& split) const;
};

struct CorpusOptions {
  std::size_t clips = 512;
  std::uint64_t seed = 7;
  std::size_t frames = 40;
  double fps = 20.0;
  double test_fraction = 0.125;
};

/// Clip i uses Rng::derive_seed(seed, i) for both its spec and its style; the
/// last ceil(test_fraction * clips) clips form the test split.
Corpus generate_corpus(const CorpusOptions& opts);

/// Writes manifest.json, parses.json, stats.json and clips/<id>.fgm2.
void write_corpus(const Corpus& corpus, const std::string& dir);
Corpus load_corpus(const std::string& dir);

}  // namespace fgt2m::motion_data
