// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <filesystem>
#include <sstream>

#include "fgt2m/cli/commands.hpp"
#include "fgt2m/cli/manifest.hpp"
#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::cli {
namespace {

namespace fs = std::filesystem;

std::string error_code(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

struct Result {
  int code;
  std::string out, err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "fgt2m");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("fgt2m_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TEST(Config, DefaultsRoundTrip) {
  Config c;
  EXPECT_EQ(Config::parse(c.dump()), c);
}

TEST(Config, EditedValuesRoundTrip) {
  Config c;
  c.model.curvature = 0.3;
  c.training.lr_max = 1.0 / 3.0;
  c.model.use_hgc = false;
  c.eval.repeats = 3;
  c.parsing.llm_key_env = "OTHER_KEY";
  const Config back = Config::parse(c.dump());
  EXPECT_EQ(back, c);
  EXPECT_EQ(back.training.lr_max, 1.0 / 3.0);
  EXPECT_EQ(back.dump(), c.dump());
}

TEST(Config, CommittedToyConfigLoads) {
  auto c = Config::load(std::string(FGT2M_SOURCE_DIR) + "/configs/toy.ini");
  EXPECT_EQ(c.training.lr_max, 2e-4);
  EXPECT_EQ(c.training.lr_min, 2e-5);
  EXPECT_EQ(c.data.clips, 512u);
  EXPECT_TRUE(fs::exists(c.parsing.fixtures));
  EXPECT_EQ(Config::parse(c.dump()), c);
}

TEST(Config, RejectsUnknownAndMalformedEntries) {
  EXPECT_EQ(error_code([] { Config::parse("[model]\nwidht = 64\n"); }), "unknown_key");
  EXPECT_EQ(error_code([] { Config::parse("[modle]\nwidth = 64\n"); }), "unknown_section");
  EXPECT_EQ(error_code([] { Config::parse("width = 64\n"); }), "unknown_key");
  EXPECT_EQ(error_code([] { Config::parse("[model]\nwidth = sixty\n"); }), "bad_value");
  EXPECT_EQ(error_code([] { Config::parse("[model]\nwidth = -4\n"); }), "bad_value");
  EXPECT_EQ(error_code([] { Config::parse("[model]\nuse_hgc = yes\n"); }), "bad_value");
  EXPECT_EQ(error_code([] { Config::parse("[model]\ncurvature = 1.0x\n"); }), "bad_value");
  EXPECT_EQ(error_code([] { Config::parse("[model]\nwidth = 30\nheads = 4\n"); }), "bad_value");
  EXPECT_EQ(error_code([] { Config::parse("[model]\nwidth = 64\nwidth = 32\n"); }), "syntax");
  EXPECT_EQ(error_code([] { Config::parse("[parsing]\nllm = true\n"); }), "bad_value");
}

TEST(Config, ReferencedPathsMustExist) {
  EXPECT_EQ(error_code([] { Config::parse("[parsing]\nfixtures = /nonexistent/parses.json\n"); }), "missing_path");
  EXPECT_EQ(error_code([] { Config::load("/nonexistent/config.ini"); }), "missing_path");
  auto dir = scratch("paths");
  write_file_atomic((dir / "file").string(), "x", "test");
  EXPECT_EQ(error_code([&] { Config::parse("[training]\nrun_dir = " + (dir / "file").string() + "\n"); }), "bad_path");
}

TEST(Config, RelativePathsResolveAgainstTheConfigFile) {
  auto dir = scratch("relative");
  fs::create_directories(dir / "conf");
  write_file_atomic((dir / "conf" / "c.ini").string(), "[data]\ncorpus_dir = ../corpus\n", "test");
  auto c = Config::load((dir / "conf" / "c.ini").string());
  EXPECT_EQ(fs::path(c.data.corpus_dir), (dir / "corpus").lexically_normal());
}

TEST(Config, OverridesAndHash) {
  Config c;
  const std::string h = c.hash();
  c.apply_overrides({"eval.repeats=2", "diffusion.guidance=4"});
  EXPECT_EQ(c.eval.repeats, 2u);
  EXPECT_EQ(c.hash(), h);
  c.apply_overrides({"model.blocks=3"});
  EXPECT_NE(c.hash(), h);
  EXPECT_EQ(error_code([&] { c.apply_overrides({"model.blocks"}); }), "bad_override");
  EXPECT_EQ(error_code([&] { c.apply_overrides({"model.nope=1"}); }), "unknown_key");
}

TEST(Manifest, RoundTripAndAtomicWrite) {
  auto dir = scratch("manifest");
  write_file_atomic((dir / "a.txt").string(), "abc", "test");
  auto m = RunManifest::begin("train", "h", 7);
  m.add_artifact((dir / "a.txt").string());
  m.write((dir / "run.json").string());
  auto back = RunManifest::from_json(nlohmann::json::parse(read_file((dir / "run.json").string(), "test")));
  EXPECT_EQ(back.command, "train");
  EXPECT_EQ(back.seed, 7u);
  EXPECT_FALSE(back.finished.empty());
  EXPECT_EQ(back.artifacts.at((dir / "a.txt").string()),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_FALSE(fs::exists(dir / "run.json.tmp"));
}

TEST(Inspect, WalksIsTheRoot) {
  auto tree = ascii_tree(text_graph::parse_template("a person walks"));
  EXPECT_EQ(tree, "walks [VERB root]\n└── person [NOUN nsubj]\n    └── a [DET det]\n");
  auto r = invoke({"inspect", "a person walks", "--json"});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["depth_layers"]["0"][0], "walks");
  EXPECT_EQ(j["encoder"], "untrained");
  EXPECT_TRUE(j["distance_to_root"].contains("1"));
  EXPECT_TRUE(j["distance_to_root"].contains("2"));
  EXPECT_EQ(j["parse"]["action"].size(), 7u);
  EXPECT_EQ(j["parse"]["semantic"].size(), 8u);
}

TEST(ExitCodes, UsageConfigAndRuntime) {
  auto usage = invoke({"sample"});
  EXPECT_EQ(usage.code, 1);
  EXPECT_EQ(usage.err.rfind("E:cli:usage", 0), 0u) << usage.err;
  auto config = invoke({"--set", "model.width=0", "dump-config"});
  EXPECT_EQ(config.code, 1);
  EXPECT_EQ(config.err.rfind("E:config:bad_value", 0), 0u) << config.err;
  auto runtime = invoke({"sample", "--prompt", "a person walks", "--out", "/tmp/x.fgm2", "--checkpoint",
                         "/nonexistent/model.fgck"});
  EXPECT_EQ(runtime.code, 2);
  EXPECT_EQ(runtime.err.rfind("E:cli:missing_checkpoint", 0), 0u) << runtime.err;
  auto grammar = invoke({"inspect", "florp the zorp"});
  EXPECT_EQ(grammar.code, 2);
  EXPECT_EQ(grammar.err.rfind("E:text_graph:", 0), 0u) << grammar.err;
  EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(Pipeline, TinyRunIsReproducible) {
  auto dir = scratch("pipeline");
  const std::string ini = (dir / "tiny.ini").string();
  write_file_atomic(ini,
                    "[model]\nwidth = 8\nblocks = 1\nheads = 2\nhgc_layers = 1\nmax_frames = 16\n"
                    "[diffusion]\nsteps = 20\nsampling_steps = 5\n"
                    "[data]\nclips = 24\nframes = 12\ncorpus_dir = corpus\n"
                    "[training]\nsteps = 3\nbatch = 2\ncheckpoint_every = 2\nrun_dir = run\n",
                    "test");
  auto gen = invoke({"-c", ini, "gen-corpus"});
  ASSERT_EQ(gen.code, 0) << gen.err;
  EXPECT_TRUE(fs::exists(dir / "corpus" / "gen-corpus.run.json"));
  EXPECT_EQ(invoke({"-c", ini, "gen-corpus"}).code, 2);
  EXPECT_EQ(invoke({"-c", ini, "gen-corpus", "--force"}).code, 0);

  auto train = invoke({"-c", ini, "train"});
  ASSERT_EQ(train.code, 0) << train.err;
  const auto csv = read_file((dir / "run" / "loss.csv").string(), "test");
  EXPECT_EQ(csv.rfind("step,loss,lr\n1,", 0), 0u);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_TRUE(fs::exists(dir / "run" / "checkpoints" / "step-000002.fgck"));
  auto manifest = nlohmann::json::parse(read_file((dir / "run" / "train.run.json").string(), "test"));
  EXPECT_EQ(manifest["artifacts"][(dir / "run" / "model.fgck").string()],
            sha256_hex(read_file((dir / "run" / "model.fgck").string(), "test")));
  auto again = invoke({"-c", ini, "train"});
  EXPECT_EQ(again.code, 2);
  EXPECT_EQ(again.err.rfind("E:cli:exists", 0), 0u);

  const std::string a = (dir / "a.fgm2").string(), b = (dir / "b.fgm2").string(), c = (dir / "c.fgm2").string();
  for (const auto& [out, seed] : {std::pair{a, "5"}, {b, "5"}, {c, "6"}}) {
    auto r = invoke({"-c", ini, "sample", "-p", "a person walks forward", "--seed", seed, "-s", "1", "-o", out,
                     "--bvh", out + ".bvh"});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  EXPECT_EQ(read_file(a, "test"), read_file(b, "test"));
  EXPECT_EQ(read_file(a + ".json", "test"), read_file(b + ".json", "test"));
  EXPECT_NE(read_file(a, "test"), read_file(c, "test"));
  auto side = nlohmann::json::parse(read_file(a + ".json", "test"));
  EXPECT_EQ(side["prompt"], "a person walks forward");
  EXPECT_EQ(side["seed"], 5);
  EXPECT_EQ(side["s"], 1.0);
  EXPECT_EQ(side["checkpoint"], sha256_hex(read_file((dir / "run" / "model.fgck").string(), "test")));
  EXPECT_EQ(read_file(a + ".bvh", "test").rfind("HIERARCHY", 0), 0u);

  auto mismatch = invoke({"-c", ini, "--set", "model.blocks=2", "eval", "--checkpoint",
                          (dir / "run" / "model.fgck").string()});
  EXPECT_EQ(mismatch.code, 2);
  EXPECT_EQ(mismatch.err.rfind("E:cli:config_mismatch", 0), 0u) << mismatch.err;
}

}  // namespace
}  // namespace fgt2m::cli
