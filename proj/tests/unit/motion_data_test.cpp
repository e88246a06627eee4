// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <set>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"
#include "fgt2m/motion_data/corpus.hpp"
#include "fgt2m/motion_data/motion.hpp"
#include "fgt2m/motion_data/synth.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::motion_data {
namespace {

using numerics::Rng;
using numerics::Tensor;
using semantic_parsing::ActionClause;
using semantic_parsing::BodyPart;

TEST(Layout, Dimensions) {
  EXPECT_EQ(make_layout(22).dim, 268u);
  EXPECT_EQ(make_layout(21).dim, 256u);
  EXPECT_EQ(make_layout(5).dim, 64u);
  EXPECT_THROW(make_layout(1), Error);
}

TEST(Layout, ComponentsPartitionChannels) {
  for (std::size_t j = 2; j <= 64; ++j) {
    PoseLayout l = make_layout(j);
    std::vector<int> hits(l.dim, 0);
    ++hits[l.root_angular_velocity];
    ++hits[l.root_velocity_x];
    ++hits[l.root_velocity_z];
    ++hits[l.root_height];
    for (std::size_t k = 0; k < j; ++k) {
      for (std::size_t a = 0; a < 3; ++a) {
        ++hits.at(l.position(k, a));
        ++hits.at(l.velocity(k, a));
      }
      for (std::size_t r = 0; r < 6; ++r) ++hits.at(l.rotation(k, r));
    }
    for (int h : hits) ASSERT_EQ(h, 1) << "J=" << j;
  }
}

MotionSequence random_motion(Rng& rng, std::size_t frames) {
  PoseLayout l = make_layout(kToyJoints);
  return MotionSequence(l, rng.normal_tensor({frames, l.dim}), 20.0);
}

TEST(Format, RoundTripAndHeader) {
  Rng rng(3);
  auto m = random_motion(rng, 40);
  std::string bytes = serialize(m);
  EXPECT_EQ(bytes.size(), 16u + 40u * 64u * 8u);
  EXPECT_EQ(bytes.size() - 16u, 20480u);
  EXPECT_EQ(bytes.substr(0, 4), "FGM2");
  auto back = deserialize(bytes);
  EXPECT_EQ(back, m);
  EXPECT_EQ(serialize(back), bytes);
}

std::string error_text(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code() + ": " + e.what();
  }
  return "";
}

TEST(Format, Errors) {
  Rng rng(4);
  std::string bytes = serialize(random_motion(rng, 3));
  std::string msg = error_text([&] { deserialize(bytes.substr(0, bytes.size() - 5)); });
  EXPECT_NE(msg.find("truncated"), std::string::npos) << msg;
  EXPECT_NE(msg.find("offset"), std::string::npos) << msg;
  std::string bad = bytes;
  bad[0] = 'X';
  EXPECT_NE(error_text([&] { deserialize(bad); }).find("bad_magic"), std::string::npos);
  bad = bytes;
  bad[4] = 9;
  EXPECT_NE(error_text([&] { deserialize(bad); }).find("bad_version"), std::string::npos);
  EXPECT_NE(error_text([&] { deserialize(bytes + "x"); }).find("trailing_bytes"), std::string::npos);
}

TEST(Normalize, FloorAndInverse) {
  Rng rng(5);
  std::vector<MotionSequence> corpus{random_motion(rng, 10), random_motion(rng, 12)};
  for (auto& m : corpus)
    for (std::size_t t = 0; t < m.length(); ++t) m.frames(t, 7) = 3.0;
  NormStats s = normalize_stats(corpus);
  EXPECT_EQ(s.std[7], NormStats::kStdFloor);
  Tensor n = s.apply(corpus[0].frames);
  for (std::size_t t = 0; t < n.rows(); ++t) EXPECT_EQ(n(t, 7), 0.0);
  EXPECT_LT(numerics::max_abs_diff(s.invert(n), corpus[0].frames), 1e-12);
  EXPECT_THROW(normalize_stats({corpus[0]}), Error);
  auto again = NormStats::from_json(s.to_json());
  EXPECT_EQ(again.mean, s.mean);
  EXPECT_EQ(again.std, s.std);
}

SyntheticSpec raise_right_arm() {
  SyntheticSpec spec;
  spec.clauses = {ActionClause{"raises", {BodyPart::kRightArm}, {}, 0, semantic_parsing::Conj::kThen}};
  spec.frames = 40;
  return spec;
}

TEST(Synth, RaiseRightArmTracesRamp) {
  SynthClip clip = synth_generate(raise_right_arm(), 99);
  EXPECT_EQ(clip.prompt, "a person raises the right arm");
  const MotionSequence& m = clip.motion;
  const PoseLayout& l = m.layout;
  ASSERT_EQ(m.length(), 40u);
  // The ramp reaches full height at 40% of the clip and holds.
  for (std::size_t t = 1; t <= 16; ++t)
    EXPECT_GT(m.frames(t, l.position(kRightHand, 1)), m.frames(t - 1, l.position(kRightHand, 1))) << t;
  for (std::size_t t = 17; t < 40; ++t)
    EXPECT_EQ(m.frames(t, l.position(kRightHand, 1)), m.frames(16, l.position(kRightHand, 1))) << t;
  EXPECT_GT(m.frames(39, l.position(kRightHand, 1)), m.frames(39, l.position(kHead, 1)));
  // Nothing but the right arm moves.
  for (std::size_t j : {std::size_t{kLeftFoot}, std::size_t{kRightFoot}, std::size_t{kLeftHand}, std::size_t{kHead}})
    for (std::size_t t = 1; t < 40; ++t)
      for (std::size_t a = 0; a < 3; ++a) {
        EXPECT_EQ(m.frames(t, l.position(j, a)), m.frames(0, l.position(j, a)));
        EXPECT_EQ(m.frames(t, l.velocity(j, a)), 0.0);
      }
  EXPECT_NE(clip.parse.part(BodyPart::kRightArm).find("lifting the right arm"), std::string::npos);
  EXPECT_EQ(clip.parse.part(BodyPart::kLeftLeg), "stabilizing stance");
}

TEST(Synth, DeterministicBytes) {
  Rng a(42), b(42);
  auto spec_a = sample_spec(a);
  auto spec_b = sample_spec(b);
  auto ca = synth_generate(spec_a, 5), cb = synth_generate(spec_b, 5);
  EXPECT_EQ(serialize(ca.motion), serialize(cb.motion));
  EXPECT_EQ(ca.parse, cb.parse);
  EXPECT_NE(serialize(synth_generate(spec_a, 6).motion), serialize(ca.motion));
}

TEST(Synth, SampledClipsSatisfyInvariants) {
  Rng rng(8);
  std::set<std::string> verbs;
  for (int i = 0; i < 300; ++i) {
    SyntheticSpec spec = sample_spec(rng);
    SynthClip clip = synth_generate(spec, rng.next_u64());
    const MotionSequence& m = clip.motion;
    const PoseLayout& l = m.layout;
    ASSERT_TRUE(m.frames.all_finite());
    ASSERT_EQ(m.length(), 40u);
    for (std::size_t t = 0; t + 1 < m.length(); ++t)
      for (std::size_t j = 0; j < l.joints; ++j)
        for (std::size_t a = 0; a < 3; ++a)
          ASSERT_EQ(m.frames(t, l.velocity(j, a)),
                    m.fps * (m.frames(t + 1, l.position(j, a)) - m.frames(t, l.position(j, a))));
    for (std::size_t t = 0; t < m.length(); ++t)
      for (std::size_t j = 0; j < l.joints; ++j) {
        double n1 = 0, n2 = 0, dot = 0;
        for (std::size_t k = 0; k < 3; ++k) {
          n1 += std::pow(m.frames(t, l.rotation(j, k)), 2);
          n2 += std::pow(m.frames(t, l.rotation(j, 3 + k)), 2);
          dot += m.frames(t, l.rotation(j, k)) * m.frames(t, l.rotation(j, 3 + k));
        }
        ASSERT_NEAR(n1, 1.0, 1e-12);
        ASSERT_NEAR(n2, 1.0, 1e-12);
        ASSERT_NEAR(dot, 0.0, 1e-12);
      }
    EXPECT_NO_THROW(text_graph::parse_template(clip.prompt)) << clip.prompt;
    EXPECT_EQ(semantic_parsing::validated(clip.parse), clip.parse);
    verbs.insert(spec.clauses.front().verb);
  }
  EXPECT_EQ(verbs.size(), 14u);
}

TEST(Synth, RejectsInvalidSpec) {
  SyntheticSpec spec;
  EXPECT_THROW(synth_generate(spec, 1), Error);
  spec.clauses = {ActionClause{"dances", {}, {}, 0, semantic_parsing::Conj::kThen}};
  EXPECT_THROW(synth_generate(spec, 1), Error);
}

TEST(Corpus, WriteLoadRoundTrip) {
  CorpusOptions opts;
  opts.clips = 24;
  opts.seed = 3;
  Corpus c = generate_corpus(opts);
  EXPECT_EQ(c.indices("test").size(), 3u);
  EXPECT_EQ(c.indices("train").size(), 21u);
  auto dir = std::filesystem::temp_directory_path() / "fgt2m_corpus_test";
  std::filesystem::remove_all(dir);
  write_corpus(c, dir.string());
  Corpus back = load_corpus(dir.string());
  EXPECT_EQ(back.manifest, c.manifest);
  EXPECT_EQ(back.motions, c.motions);
  EXPECT_EQ(back.parses, c.parses);
  EXPECT_EQ(back.stats.mean, c.stats.mean);
  Corpus again = generate_corpus(opts);
  EXPECT_EQ(again.motions, c.motions);
  std::filesystem::remove_all(dir);
}

TEST(Corpus, ToyStatsMatchGolden) {
  Corpus c = generate_corpus(CorpusOptions{});
  auto golden = NormStats::from_json(
      nlohmann::json::parse(read_file(std::string(FGT2M_SOURCE_DIR) + "/tests/data/toy_stats_seed7.json", "test")));
  ASSERT_EQ(golden.mean.size(), c.stats.mean.size());
  for (std::size_t i = 0; i < golden.mean.size(); ++i) {
    EXPECT_NEAR(c.stats.mean[i], golden.mean[i], 1e-12) << i;
    EXPECT_NEAR(c.stats.std[i], golden.std[i], 1e-12) << i;
  }
}

TEST(Bvh, PositionsOnlyExport) {
  SynthClip clip = synth_generate(raise_right_arm(), 1);
  std::string bvh = to_bvh(clip.motion, toy_joint_names());
  EXPECT_EQ(bvh.rfind("HIERARCHY\nROOT root", 0), 0u);
  EXPECT_NE(bvh.find("Frames: 40\n"), std::string::npos);
  EXPECT_NE(bvh.find("Frame Time: 0.050000\n"), std::string::npos);
  const auto motion_at = bvh.find("Frame Time");
  std::size_t lines = 0;
  for (std::size_t i = motion_at; i < bvh.size(); ++i) lines += bvh[i] == '\n';
  EXPECT_EQ(lines, 41u);
  EXPECT_THROW(to_bvh(clip.motion, {"a"}), Error);
}

}  // namespace
}  // namespace fgt2m::motion_data
