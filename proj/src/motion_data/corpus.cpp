// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/motion_data/corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"
#include "fgt2m/motion_data/synth.hpp"

namespace fgt2m::motion_data {

using nlohmann::json;

json CorpusManifest::to_json() const {
  json entries_json = json::array();
  for (const auto& e : entries)
    entries_json.push_back(
        {{"id", e.id}, {"prompt", e.prompt}, {"file", e.file}, {"parse_key", e.parse_key}, {"split", e.split}});
  return {{"version", version}, {"seed", seed},   {"joints", joints},
          {"frames", frames},   {"fps", fps},     {"entries", entries_json}};
}

CorpusManifest CorpusManifest::from_json(const json& j) {
  CorpusManifest m;
  try {
    m.version = j.at("version").get<int>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.joints = j.at("joints").get<std::size_t>();
    m.frames = j.at("frames").get<std::size_t>();
    m.fps = j.at("fps").get<double>();
    for (const auto& e : j.at("entries"))
      m.entries.push_back({e.at("id").get<std::string>(), e.at("prompt").get<std::string>(),
                           e.at("file").get<std::string>(), e.at("parse_key").get<std::string>(),
                           e.at("split").get<std::string>()});
  } catch (const json::exception& e) {
    throw Error("motion_data", "bad_manifest", e.what());
  }
  if (m.version != 1) throw Error("motion_data", "bad_manifest", "unsupported manifest version");
  return m;
}

std::vector<std::size_t> Corpus::indices(const std::string& split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < manifest.entries.size(); ++i)
    if (manifest.entries[i].split == split) out.push_back(i);
  return out;
}

Corpus generate_corpus(const CorpusOptions& opts) {
  if (opts.clips < 2) throw Error("motion_data", "bad_corpus", "corpus needs at least 2 clips");
  Corpus corpus;
  corpus.manifest.seed = opts.seed;
  corpus.manifest.frames = opts.frames;
  corpus.manifest.fps = opts.fps;
  const auto test_count = static_cast<std::size_t>(std::ceil(opts.test_fraction * static_cast<double>(opts.clips)));
  std::vector<MotionSequence> train;
  for (std::size_t i = 0; i < opts.clips; ++i) {
    const std::uint64_t clip_seed = numerics::Rng::derive_seed(opts.seed, i);
    numerics::Rng rng(clip_seed);
    SynthClip clip = synth_generate(sample_spec(rng, opts.frames, opts.fps), rng.next_u64());
    char id[32];
    std::snprintf(id, sizeof id, "clip_%04zu", i);
    const std::string split = i + test_count >= opts.clips ? "test" : "train";
    corpus.manifest.entries.push_back(
        {id, clip.prompt, std::string("clips/") + id + ".fgm2", clip.parse.prompt, split});
    corpus.parses.emplace(clip.parse.prompt, clip.parse);
    if (split == "train") train.push_back(clip.motion);
    corpus.motions.push_back(std::move(clip.motion));
  }
  if (train.size() < 2) throw Error("motion_data", "bad_corpus", "train split needs at least 2 clips");
  corpus.stats = normalize_stats(train);
  return corpus;
}

void write_corpus(const Corpus& corpus, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(fs::path(dir) / "clips");
  for (std::size_t i = 0; i < corpus.motions.size(); ++i)
    save_motion((fs::path(dir) / corpus.manifest.entries[i].file).string(), corpus.motions[i]);
  write_file_atomic((fs::path(dir) / "parses.json").string(), semantic_parsing::dump_fixtures(corpus.parses),
                    "motion_data");
  write_file_atomic((fs::path(dir) / "stats.json").string(), corpus.stats.to_json().dump() + "\n", "motion_data");
  write_file_atomic((fs::path(dir) / "manifest.json").string(), corpus.manifest.to_json().dump(2) + "\n",
                    "motion_data");
}

Corpus load_corpus(const std::string& dir) {
  namespace fs = std::filesystem;
  Corpus corpus;
  auto parse_json = [&](const char* name) {
    try {
      return json::parse(read_file((fs::path(dir) / name).string(), "motion_data"));
    } catch (const json::parse_error& e) {
      throw Error("motion_data", "bad_json", std::string(name) + ": " + e.what());
    }
  };
  corpus.manifest = CorpusManifest::from_json(parse_json("manifest.json"));
  corpus.stats = NormStats::from_json(parse_json("stats.json"));
  corpus.parses = semantic_parsing::load_fixtures((fs::path(dir) / "parses.json").string());
  for (const auto& e : corpus.manifest.entries) {
    corpus.motions.push_back(load_motion((fs::path(dir) / e.file).string()));
    if (!corpus.parses.count(e.parse_key))
      throw Error("motion_data", "bad_manifest", "clip " + e.id + " references missing parse '" + e.parse_key + "'");
  }
  return corpus;
}

}  // namespace fgt2m::motion_data
