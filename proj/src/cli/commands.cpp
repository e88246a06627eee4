// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/cli/commands.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "fgt2m/cli/manifest.hpp"
#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"
#include "fgt2m/evaluation/diagnostics.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::cli {

namespace fs = std::filesystem;
using namespace numerics;

namespace {

struct LoadedModel {
  diffusion::Model model;
  nlohmann::json metadata;
  std::string sha256;
};

LoadedModel load_model(const std::string& path) {
  if (!fs::exists(path)) throw Error("cli", "missing_checkpoint", "checkpoint not found: " + path);
  const std::string bytes = read_file(path, "cli");
  Checkpoint ck = Checkpoint::deserialize(bytes);
  return {diffusion::Model::from_checkpoint(ck), ck.metadata, sha256_hex(bytes)};
}

std::string checkpoint_path(const Config& cfg, const std::string& given) {
  return given.empty() ? (fs::path(cfg.training.run_dir) / "model.fgck").string() : given;
}

semantic_parsing::ParseChain parse_chain(const Config& cfg) {
  semantic_parsing::FixtureTable fixtures;
  if (!cfg.parsing.fixtures.empty()) fixtures = semantic_parsing::load_fixtures(cfg.parsing.fixtures);
  std::shared_ptr<semantic_parsing::LlmClient> llm;
  if (cfg.parsing.llm) llm = std::make_shared<semantic_parsing::LlmClient>(cfg.llm_config());
  return semantic_parsing::ParseChain(std::move(fixtures), llm);
}

struct Resolved {
  text_graph::DependencyGraph graph;
  semantic_parsing::ParsedPrompt parse;
};

Resolved resolve(const Config& cfg, const std::string& prompt, std::ostream& log) {
  auto g = text_graph::parse_template(prompt);
  auto chain = parse_chain(cfg);
  auto parse = chain.resolve(prompt, g);
  if (auto why = chain.last_fallback_reason()) log << "parser fell back to the mock parser: " << *why << "\n";
  return {g, parse};
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_corpus(const Config& cfg, const motion_data::Corpus& corpus) {
  const auto& m = corpus.manifest;
  if (m.seed != cfg.data.seed || m.entries.size() != cfg.data.clips || m.frames != cfg.data.frames)
    throw Error("cli", "corpus_mismatch",
                "corpus in " + cfg.data.corpus_dir + " was generated with different [data] settings; rerun gen-corpus");
}

evaluation::Evaluator evaluator_for(const Config& cfg, const motion_data::Corpus& corpus, RunManifest& manifest,
                                    std::ostream& log) {
  const auto opts = cfg.evaluator_options();
  const std::string key = sha256_hex(cfg.hash() + "|" + std::to_string(cfg.eval.evaluator_embed) + "|" +
                                     std::to_string(opts.steps) + "|" + std::to_string(opts.batch) + "|" +
                                     format_double(opts.lr) + "|" + std::to_string(opts.seed))
                              .substr(0, 12);
  const std::string path = (fs::path(cfg.training.run_dir) / ("evaluator-" + key + ".fgck")).string();
  if (fs::exists(path)) {
    log << "evaluator: reusing " << path << "\n";
    manifest.add_artifact(path);
    return evaluation::Evaluator::from_checkpoint(Checkpoint::load(path));
  }
  std::vector<std::string> prompts;
  std::vector<motion_data::MotionSequence> motions;
  std::vector<std::vector<std::string>> streams;
  for (std::size_t i : corpus.indices("train")) {
    prompts.push_back(corpus.manifest.entries[i].prompt);
    motions.push_back(corpus.motions[i]);
    streams.push_back(text_graph::tokenize(prompts.back()));
  }
  evaluation::EvaluatorConfig ec;
  ec.motion_dim = corpus.motions.front().frames.cols();
  ec.max_tokens = cfg.model.prompt_max;
  ec.embed = cfg.eval.evaluator_embed;
  auto ev = evaluation::Evaluator::create(ec, text_encoder::build_vocabulary(streams), corpus.stats, opts.seed);
  log << "evaluator: training " << opts.steps << " steps\n";
  auto losses = evaluation::train_evaluator(ev, prompts, motions, opts);
  log << "evaluator: final contrastive loss " << losses.back() << "\n";
  fs::create_directories(cfg.training.run_dir);
  ev.to_checkpoint().save(path);
  manifest.add_artifact(path);
  return ev;
}

void render_subtree(const text_graph::DependencyGraph& g, std::size_t node, const std::string& prefix, bool last,
                    std::string& out) {
  const auto& t = g.token(node);
  out += prefix + (last ? "└── " : "├── ") + t.surface + " [" + t.upos + " " + t.deprel + "]\n";
  const auto kids = g.children(node);
  for (std::size_t i = 0; i < kids.size(); ++i)
    render_subtree(g, kids[i], prefix + (last ? "    " : "│   "), i + 1 == kids.size(), out);
}

}  // namespace

std::string ascii_tree(const text_graph::DependencyGraph& g) {
  const auto& r = g.token(g.root());
  std::string out = r.surface + " [" + r.upos + " " + r.deprel + "]\n";
  const auto kids = g.children(g.root());
  for (std::size_t i = 0; i < kids.size(); ++i) render_subtree(g, kids[i], "", i + 1 == kids.size(), out);
  return out;
}

void cmd_gen_corpus(const Config& cfg, bool force, std::ostream& log) {
  auto manifest = RunManifest::begin("gen-corpus", cfg.hash(), cfg.data.seed);
  const fs::path dir(cfg.data.corpus_dir);
  if (fs::exists(dir / "manifest.json") && !force)
    throw Error("cli", "exists", "corpus already present in " + dir.string() + " (use --force to overwrite)");
  auto corpus = motion_data::generate_corpus(cfg.corpus_options());
  fs::create_directories(dir);
  motion_data::write_corpus(corpus, dir.string());
  for (const char* f : {"manifest.json", "parses.json", "stats.json"}) manifest.add_artifact((dir / f).string());
  for (const auto& e : corpus.manifest.entries) manifest.add_artifact((dir / e.file).string());
  manifest.write((dir / "gen-corpus.run.json").string());
  log << "wrote " << corpus.motions.size() << " clips to " << dir.string() << "\n";
}

void cmd_train(const Config& cfg, bool force, std::ostream& log) {
  auto manifest = RunManifest::begin("train", cfg.hash(), cfg.training.seed);
  const fs::path dir(cfg.training.run_dir);
  if (fs::exists(dir / "model.fgck") && !force)
    throw Error("cli", "exists", "a trained model already exists in " + dir.string() + " (use --force to overwrite)");
  auto corpus = motion_data::load_corpus(cfg.data.corpus_dir);
  check_corpus(cfg, corpus);
  auto items = diffusion::training_items(corpus, "train");
  auto model = diffusion::Model::create(cfg.model_config(items.front().x0.cols()),
                                        diffusion::corpus_vocabulary(corpus, "train"), corpus.stats, cfg.training.seed);
  fs::create_directories(dir / "checkpoints");
  const nlohmann::json extra = {{"config_hash", cfg.hash()}, {"config", cfg.dump()}};

  std::ofstream csv(dir / "loss.csv", std::ios::trunc);
  if (!csv) throw Error("cli", "io", "cannot write " + (dir / "loss.csv").string());
  csv << "step,loss,lr\n";
  const long every = cfg.training.checkpoint_every;
  log << "training " << cfg.training.steps << " steps, " << model.params.scalar_count() << " parameters\n";
  diffusion::train(model, items, cfg.train_options(), [&](const diffusion::TrainLogRow& row) {
    csv << row.step << "," << format_double(row.loss) << "," << format_double(row.lr) << "\n";
    csv.flush();
    if (row.step % 100 == 0 || row.step == 1) log << "step " << row.step << " loss " << row.loss << "\n";
    if (every > 0 && row.step % every == 0 && row.step != cfg.training.steps) {
      char name[32];
      std::snprintf(name, sizeof name, "step-%06ld.fgck", row.step);
      auto meta = extra;
      meta["step"] = row.step;
      const auto path = (dir / "checkpoints" / name).string();
      model.to_checkpoint(meta).save(path);
      manifest.add_artifact(path);
    }
  });
  csv.close();
  auto meta = extra;
  meta["step"] = cfg.training.steps;
  const auto path = (dir / "model.fgck").string();
  model.to_checkpoint(meta).save(path);
  manifest.add_artifact(path);
  manifest.add_artifact((dir / "loss.csv").string());
  manifest.write((dir / "train.run.json").string());
  log << "checkpoint " << path << " sha256 " << manifest.artifacts[path] << "\n";
}

void cmd_sample(const Config& cfg, const SampleOptions& opts, std::ostream& log) {
  if (opts.prompt.empty() || opts.out.empty()) throw Error("usage", "missing_argument", "sample needs --prompt and --out");
  auto manifest = RunManifest::begin("sample", cfg.hash(), opts.seed);
  const auto loaded = load_model(checkpoint_path(cfg, opts.checkpoint));
  const auto r = resolve(cfg, opts.prompt, log);
  const auto cond = diffusion::make_condition(opts.prompt, r.parse);
  const double scale = opts.scale.value_or(cfg.diffusion.guidance);
  const std::size_t frames = opts.frames.value_or(cfg.data.frames);
  auto motion = loaded.model.generate(cond, cfg.guidance(scale), opts.seed, frames, cfg.data.fps);

  motion_data::save_motion(opts.out, motion);
  const nlohmann::json sidecar = {{"prompt", opts.prompt},
                                  {"seed", opts.seed},
                                  {"s", scale},
                                  {"checkpoint", loaded.sha256},
                                  {"sampling_steps", cfg.diffusion.sampling_steps},
                                  {"frames", frames},
                                  {"fps", cfg.data.fps},
                                  {"parse_source", std::string(semantic_parsing::source_name(r.parse.source))}};
  write_file_atomic(opts.out + ".json", sidecar.dump(2) + "\n", "cli");
  manifest.add_artifact(opts.out);
  manifest.add_artifact(opts.out + ".json");
  if (!opts.bvh.empty()) {
    write_file_atomic(opts.bvh, motion_data::to_bvh(motion, motion_data::toy_joint_names()), "cli");
    manifest.add_artifact(opts.bvh);
  }
  manifest.write(opts.out + ".run.json");
  log << "wrote " << opts.out << " (" << frames << " frames)\n";
}

void cmd_eval(const Config& cfg, const EvalCommandOptions& opts, std::ostream& log) {
  auto manifest = RunManifest::begin("eval", cfg.hash(), cfg.eval.seed);
  const std::string ck = checkpoint_path(cfg, opts.checkpoint);
  const auto loaded = load_model(ck);
  const std::string ck_hash = loaded.metadata.value("config_hash", "");
  if (ck_hash != cfg.hash()) {
    if (!opts.force)
      throw Error("cli", "config_mismatch",
                  "checkpoint was trained under config hash " + ck_hash.substr(0, 12) + ", current config hashes to " +
                      cfg.hash().substr(0, 12) + " (use --force to evaluate anyway)");
    log << "warning: evaluating a checkpoint from a different config\n";
  }
  auto corpus = motion_data::load_corpus(cfg.data.corpus_dir);
  check_corpus(cfg, corpus);
  const auto ev = evaluator_for(cfg, corpus, manifest, log);
  auto report = evaluation::run_evaluation(loaded.model, ev, corpus, cfg.eval_options(),
                                           [&](const std::string& s) { log << s << "\n"; });

  // Tree diagnostics over every distinct corpus prompt.
  std::vector<text_graph::DependencyGraph> graphs;
  std::set<std::string> seen;
  for (const auto& e : corpus.manifest.entries)
    if (seen.insert(e.prompt).second) graphs.push_back(text_graph::parse_template(e.prompt));
  const auto order =
      evaluation::hierarchy_order(loaded.model.params, loaded.model.config.text, loaded.model.vocab, graphs);

  report.meta["checkpoint"] = loaded.sha256;
  report.meta["config_hash"] = cfg.hash();
  report.meta["code_version"] = code_version();
  report.meta["repeats"] = cfg.eval.repeats;
  report.meta["guidance"] = cfg.diffusion.guidance;
  report.meta["sampling_steps"] = cfg.diffusion.sampling_steps;
  report.meta["hierarchy_order"] = order.to_json();

  std::vector<std::string> test_prompts, train_prompts;
  std::vector<text_graph::DependencyGraph> test_graphs;
  std::set<std::string> seen_test, seen_train;
  for (const auto& e : corpus.manifest.entries) {
    if (e.split == "test" && seen_test.insert(e.prompt).second) {
      test_prompts.push_back(e.prompt);
      test_graphs.push_back(text_graph::parse_template(e.prompt));
    } else if (e.split == "train" && seen_train.insert(e.prompt).second) {
      train_prompts.push_back(e.prompt);
    }
  }
  const nlohmann::json strata = {
      {"schema", "fgt2m.strata.v1"},
      {"pos", evaluation::pos_stratify(test_graphs).to_json("pos_count")},
      {"rareness", evaluation::rareness_stratify(test_prompts, ev.embed_texts(test_prompts),
                                                 ev.embed_texts(train_prompts))
                       .to_json("rareness")}};

  const fs::path dir(cfg.training.run_dir);
  fs::create_directories(dir);
  const std::string out = opts.out.empty() ? (dir / "metrics.json").string() : opts.out;
  write_file_atomic(out, report.to_json().dump(2) + "\n", "cli");
  const std::string strata_path = (fs::path(out).parent_path() / "strata.json").string();
  write_file_atomic(strata_path, strata.dump(2) + "\n", "cli");
  manifest.add_artifact(out);
  manifest.add_artifact(strata_path);
  manifest.write((fs::path(out).parent_path() / "eval.run.json").string());
  for (const auto& [name, iv] : report.metrics) log << name << " " << iv.mean << " +- " << iv.ci95 << "\n";
}

std::string cmd_inspect(const Config& cfg, const InspectOptions& opts) {
  std::ostringstream notes;
  const auto r = resolve(cfg, opts.prompt, notes);
  const auto& g = r.graph;

  ParameterStore store;
  text_encoder::TextEncoderConfig tcfg;
  text_encoder::Vocabulary vocab;
  bool trained = false;
  if (!opts.checkpoint.empty()) {
    auto loaded = load_model(opts.checkpoint);
    store = loaded.model.params;
    tcfg = loaded.model.config.text;
    vocab = loaded.model.vocab;
    trained = true;
  } else {
    tcfg = cfg.model_config(0).text;
    vocab = text_encoder::build_vocabulary({g.surfaces()});
    Rng rng(cfg.training.seed);
    text_encoder::init_text_encoder(store, rng, tcfg, vocab.size());
  }
  const auto distances =
      evaluation::depth_distances(evaluation::hyperbolic_nodes(store, tcfg, vocab, g), g, tcfg.hgc.curvature);
  const auto layers = text_graph::depth_layers(g);

  if (opts.json) {
    nlohmann::json j;
    j["prompt"] = opts.prompt;
    for (const auto& t : g.tokens())
      j["tree"].push_back({{"index", t.index}, {"surface", t.surface}, {"upos", t.upos}, {"head", t.head},
                           {"deprel", t.deprel}});
    for (const auto& [depth, nodes] : layers) {
      std::vector<std::string> words;
      for (auto n : nodes) words.push_back(g.token(n).surface);
      j["depth_layers"][std::to_string(depth)] = words;
    }
    j["parse"] = semantic_parsing::to_json(r.parse);
    j["parse_source"] = std::string(semantic_parsing::source_name(r.parse.source));
    j["encoder"] = trained ? "trained" : "untrained";
    for (const auto& [depth, d] : distances) j["distance_to_root"][std::to_string(depth)] = d;
    return j.dump(2) + "\n";
  }

  std::ostringstream out;
  out << "dependency tree:\n" << ascii_tree(g) << "\ndepth layers:\n";
  for (const auto& [depth, nodes] : layers) {
    out << "  " << depth << ":";
    for (auto n : nodes) out << " " << g.token(n).surface;
    out << "\n";
  }
  out << "\nparse (" << semantic_parsing::source_name(r.parse.source) << "):\n";
  for (std::size_t i = 0; i < semantic_parsing::kActionSlots; ++i)
    out << "  " << semantic_parsing::kActionKeys[i] << ": " << r.parse.action[i] << "\n";
  for (std::size_t i = 0; i < semantic_parsing::kSemanticSlots; ++i)
    out << "  " << semantic_parsing::kSemanticKeys[i] << ": " << r.parse.semantic[i] << "\n";
  out << "\nhyperbolic distance to root (" << (trained ? "trained" : "untrained") << " encoder):\n";
  for (const auto& [depth, d] : distances) out << "  depth " << depth << ": " << format_double(d) << "\n";
  out << notes.str();
  return out.str();
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Tree-conditioned text-to-motion diffusion toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::vector<std::string> overrides;
  app.add_option("-c,--config", config_path, "INI config file (defaults apply when omitted)");
  app.add_option("--set", overrides, "Override a config key: section.key=value (repeatable)");

  bool force = false;
  auto* gen = app.add_subcommand("gen-corpus", "Generate the synthetic motion corpus");
  gen->add_flag("--force", force, "Overwrite an existing corpus");

  auto* train = app.add_subcommand("train", "Train the diffusion model");
  train->add_flag("--force", force, "Overwrite an existing run");

  SampleOptions so;
  double scale = 0.0;
  std::size_t frames = 0;
  auto* sample = app.add_subcommand("sample", "Generate one motion for a prompt");
  sample->add_option("-p,--prompt", so.prompt, "Text prompt")->required();
  sample->add_option("-o,--out", so.out, "Output motion file (FGM2)")->required();
  sample->add_option("--checkpoint", so.checkpoint, "Model checkpoint (default <run_dir>/model.fgck)");
  sample->add_option("--seed", so.seed, "Sampler seed");
  auto* scale_opt = sample->add_option("-s,--scale", scale, "Guidance scale (default [diffusion] guidance)");
  auto* frames_opt = sample->add_option("--frames", frames, "Frame count (default [data] frames)");
  sample->add_option("--bvh", so.bvh, "Also write a BVH file");

  EvalCommandOptions eo;
  auto* eval = app.add_subcommand("eval", "Run the metric suite on the test split");
  eval->add_option("--checkpoint", eo.checkpoint, "Model checkpoint (default <run_dir>/model.fgck)");
  eval->add_option("-o,--out", eo.out, "Metric report path (default <run_dir>/metrics.json)");
  eval->add_flag("--force", eo.force, "Evaluate even if the checkpoint's config hash differs");

  InspectOptions io;
  auto* inspect = app.add_subcommand("inspect", "Show tree, parse and hyperbolic depth distances for a prompt");
  inspect->add_option("prompt", io.prompt, "Text prompt")->required();
  inspect->add_option("--checkpoint", io.checkpoint, "Use a trained text encoder");
  inspect->add_flag("--json", io.json, "JSON output");

  auto* dump = app.add_subcommand("dump-config", "Print the resolved config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "E:cli:usage " << e.what() << "\n";
    return 1;
  }

  try {
    Config cfg = config_path.empty() ? Config{} : Config::load(config_path);
    cfg.apply_overrides(overrides);
    if (*gen) cmd_gen_corpus(cfg, force, err);
    else if (*train) cmd_train(cfg, force, err);
    else if (*sample) {
      if (*scale_opt) so.scale = scale;
      if (*frames_opt) so.frames = frames;
      cmd_sample(cfg, so, err);
    } else if (*eval) cmd_eval(cfg, eo, err);
    else if (*inspect) out << cmd_inspect(cfg, io);
    else if (*dump) out << cfg.dump();
    return 0;
  } catch (const Error& e) {
    err << "E:" << e.module() << ":" << e.code() << " " << e.what() << "\n";
    return e.module() == "config" || e.module() == "usage" ? 1 : 2;
  } catch (const std::exception& e) {
    err << "E:cli:internal " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fgt2m::cli
