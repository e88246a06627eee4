// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/cli/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <sstream>
#include <variant>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"

namespace fgt2m::cli {

namespace fs = std::filesystem;

namespace {

static_assert(std::is_same_v<std::size_t, std::uint64_t>, "seeds and counts share one integer type");

struct Path {
  std::string* value;
};

using Slot = std::variant<std::size_t*, long*, double*, bool*, std::string*, Path>;

struct Field {
  const char* section;
  const char* key;
  Slot slot;
  bool hashed;
};

template <typename C>
std::vector<Field> fields(C& c) {
  return {
      {"model", "width", &c.model.width, true},
      {"model", "blocks", &c.model.blocks, true},
      {"model", "heads", &c.model.heads, true},
      {"model", "hgc_layers", &c.model.hgc_layers, true},
      {"model", "curvature", &c.model.curvature, true},
      {"model", "prompt_max", &c.model.prompt_max, true},
      {"model", "parsed_max", &c.model.parsed_max, true},
      {"model", "max_frames", &c.model.max_frames, true},
      {"model", "use_hgc", &c.model.use_hgc, true},
      {"model", "use_parsed", &c.model.use_parsed, true},
      {"diffusion", "steps", &c.diffusion.steps, true},
      {"diffusion", "beta_min", &c.diffusion.beta_min, true},
      {"diffusion", "beta_max", &c.diffusion.beta_max, true},
      {"diffusion", "condition_drop", &c.diffusion.condition_drop, true},
      {"diffusion", "guidance", &c.diffusion.guidance, false},
      {"diffusion", "sampling_steps", &c.diffusion.sampling_steps, false},
      {"data", "joints", &c.data.joints, true},
      {"data", "frames", &c.data.frames, true},
      {"data", "clips", &c.data.clips, true},
      {"data", "seed", &c.data.seed, true},
      {"data", "fps", &c.data.fps, true},
      {"data", "test_fraction", &c.data.test_fraction, true},
      {"data", "corpus_dir", Path{&c.data.corpus_dir}, false},
      {"parsing", "fixtures", Path{&c.parsing.fixtures}, false},
      {"parsing", "llm", &c.parsing.llm, false},
      {"parsing", "llm_base_url", &c.parsing.llm_base_url, false},
      {"parsing", "llm_model", &c.parsing.llm_model, false},
      {"parsing", "llm_key_env", &c.parsing.llm_key_env, false},
      {"parsing", "llm_timeout", &c.parsing.llm_timeout, false},
      {"training", "lr_max", &c.training.lr_max, true},
      {"training", "lr_min", &c.training.lr_min, true},
      {"training", "warmup", &c.training.warmup, true},
      {"training", "batch", &c.training.batch, true},
      {"training", "steps", &c.training.steps, true},
      {"training", "clip", &c.training.clip, true},
      {"training", "seed", &c.training.seed, true},
      {"training", "checkpoint_every", &c.training.checkpoint_every, false},
      {"training", "run_dir", Path{&c.training.run_dir}, false},
      {"eval", "repeats", &c.eval.repeats, false},
      {"eval", "diversity_group", &c.eval.diversity_group, false},
      {"eval", "mm_texts", &c.eval.mm_texts, false},
      {"eval", "mm_samples", &c.eval.mm_samples, false},
      {"eval", "mm_pairs", &c.eval.mm_pairs, false},
      {"eval", "seed", &c.eval.seed, false},
      {"eval", "baselines", &c.eval.baselines, false},
      {"eval", "evaluator_embed", &c.eval.evaluator_embed, false},
      {"eval", "evaluator_steps", &c.eval.evaluator_steps, false},
      {"eval", "evaluator_batch", &c.eval.evaluator_batch, false},
      {"eval", "evaluator_lr", &c.eval.evaluator_lr, false},
      {"eval", "evaluator_seed", &c.eval.evaluator_seed, false},
  };
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string render(const Slot& slot) {
  return std::visit(
      [](auto p) -> std::string {
        using S = decltype(p);
        if constexpr (std::is_same_v<S, Path>) {
          return *p.value;
        } else {
          using T = std::remove_pointer_t<S>;
          if constexpr (std::is_same_v<T, double>) return format_double(*p);
          else if constexpr (std::is_same_v<T, bool>) return *p ? "true" : "false";
          else if constexpr (std::is_same_v<T, std::string>) return *p;
          else return std::to_string(*p);
        }
      },
      slot);
}

[[noreturn]] void bad_value(const Field& f, const std::string& text, const char* expected) {
  throw Error("config", "bad_value",
              std::string(f.section) + "." + f.key + ": expected " + expected + ", got '" + text + "'");
}

template <typename T>
T parse_number(const Field& f, const std::string& text, const char* expected) {
  T v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size() || text.empty()) bad_value(f, text, expected);
  return v;
}

void assign(const Field& f, const std::string& text, const fs::path& base) {
  std::visit(
      [&](auto p) {
        using S = decltype(p);
        if constexpr (std::is_same_v<S, Path>) {
          *p.value = text.empty() || fs::path(text).is_absolute() ? text : (base / text).lexically_normal().string();
        } else {
          using T = std::remove_pointer_t<S>;
          if constexpr (std::is_same_v<T, bool>) {
            if (text == "true") *p = true;
            else if (text == "false") *p = false;
            else bad_value(f, text, "true or false");
          } else if constexpr (std::is_same_v<T, std::string>) {
            *p = text;
          } else if constexpr (std::is_same_v<T, double>) {
            // from_chars for double is missing from older standard libraries.
            std::istringstream in(text);
            in.imbue(std::locale::classic());
            double v = 0.0;
            if (!(in >> v) || !in.eof()) bad_value(f, text, "a number");
            *p = v;
          } else if constexpr (std::is_same_v<T, long>) {
            *p = parse_number<long>(f, text, "an integer");
          } else {
            *p = parse_number<std::size_t>(f, text, "a non-negative integer");
          }
        }
      },
      f.slot);
}

const Field* find(const std::vector<Field>& table, const std::string& section, const std::string& key) {
  for (const auto& f : table)
    if (section == f.section && key == f.key) return &f;
  return nullptr;
}

bool known_section(const std::string& s) {
  return s == "model" || s == "diffusion" || s == "data" || s == "parsing" || s == "training" || s == "eval";
}

}  // namespace

Config Config::parse(const std::string& text, const std::string& base_dir) {
  namespace pt = boost::property_tree;
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::ini_parser::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw Error("config", "syntax", "line " + std::to_string(e.line()) + ": " + e.message());
  }
  Config c;
  const auto table = fields(c);
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw Error("config", "unknown_key", "key '" + section + "' outside any section");
    if (!known_section(section)) throw Error("config", "unknown_section", "unknown section [" + section + "]");
    for (const auto& [key, value] : body) {
      const Field* f = find(table, section, key);
      if (!f) throw Error("config", "unknown_key", "unknown key " + section + "." + key);
      assign(*f, value.data(), base_dir);
    }
  }
  c.validate();
  return c;
}

Config Config::load(const std::string& path) {
  if (!fs::exists(path)) throw Error("config", "missing_path", "config file not found: " + path);
  return parse(read_file(path, "config"), fs::path(path).parent_path().string().empty()
                                              ? std::string(".")
                                              : fs::path(path).parent_path().string());
}

std::string Config::dump() const {
  Config copy = *this;
  std::string out;
  std::string section;
  for (const auto& f : fields(copy)) {
    if (section != f.section) {
      if (!section.empty()) out += "\n";
      section = f.section;
      out += "[" + section + "]\n";
    }
    out += std::string(f.key) + " = " + render(f.slot) + "\n";
  }
  return out;
}

void Config::apply_overrides(const std::vector<std::string>& assignments, const std::string& base_dir) {
  const auto table = fields(*this);
  for (const auto& a : assignments) {
    const auto eq = a.find('='), dot = a.find('.');
    if (eq == std::string::npos || dot == std::string::npos || dot > eq)
      throw Error("config", "bad_override", "expected section.key=value, got '" + a + "'");
    const std::string section = a.substr(0, dot), key = a.substr(dot + 1, eq - dot - 1);
    const Field* f = find(table, section, key);
    if (!f) throw Error("config", "unknown_key", "unknown key " + section + "." + key);
    assign(*f, a.substr(eq + 1), base_dir);
  }
  validate();
}

void Config::validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw Error("config", "bad_value", what);
  };
  require(model.width > 0 && model.heads > 0 && model.width % model.heads == 0,
          "model.width must be a positive multiple of model.heads");
  require(model.blocks > 0, "model.blocks must be positive");
  require(model.curvature > 0.0, "model.curvature must be positive");
  require(model.prompt_max > 0 && model.parsed_max >= 15, "model.prompt_max > 0 and model.parsed_max >= 15");
  require(diffusion.steps >= 2, "diffusion.steps must be at least 2");
  require(diffusion.beta_min > 0.0 && diffusion.beta_min <= diffusion.beta_max && diffusion.beta_max < 1.0,
          "need 0 < diffusion.beta_min <= diffusion.beta_max < 1");
  require(diffusion.condition_drop >= 0.0 && diffusion.condition_drop <= 1.0, "diffusion.condition_drop in [0, 1]");
  require(diffusion.guidance >= 0.0, "diffusion.guidance must be non-negative");
  require(diffusion.sampling_steps >= 1 && diffusion.sampling_steps <= diffusion.steps,
          "diffusion.sampling_steps in [1, diffusion.steps]");
  require(data.joints == motion_data::kToyJoints, "data.joints: the synthetic skeleton has 5 markers");
  require(data.frames > 0 && data.frames <= model.max_frames, "data.frames in [1, model.max_frames]");
  require(data.clips >= 2 && data.fps > 0.0, "data.clips >= 2 and data.fps > 0");
  require(data.test_fraction > 0.0 && data.test_fraction < 1.0, "data.test_fraction in (0, 1)");
  require(training.lr_max > 0.0 && training.lr_min >= 0.0 && training.lr_min <= training.lr_max,
          "need 0 <= training.lr_min <= training.lr_max, lr_max > 0");
  require(training.batch > 0 && training.steps > 0 && training.warmup >= 0, "training batch/steps/warmup");
  require(training.checkpoint_every >= 0, "training.checkpoint_every must be non-negative");
  require(eval.repeats > 0 && eval.mm_samples >= 2 && eval.mm_pairs > 0 && eval.evaluator_steps > 0 &&
              eval.evaluator_embed > 0,
          "eval repeats/mm_samples/mm_pairs/evaluator_steps/evaluator_embed");
  if (parsing.llm) {
    require(!parsing.llm_base_url.empty() && !parsing.llm_model.empty(),
            "parsing.llm needs parsing.llm_base_url and parsing.llm_model");
    require(parsing.llm_timeout > 0.0, "parsing.llm_timeout must be positive");
  }
  auto exists = [](const std::string& p, const std::string& key) {
    if (!fs::exists(p)) throw Error("config", "missing_path", key + ": no such file or directory: " + p);
  };
  if (!parsing.fixtures.empty()) exists(parsing.fixtures, "parsing.fixtures");
  // Output directories are created on demand but must not collide with files.
  for (const auto& [p, key] : {std::pair{data.corpus_dir, "data.corpus_dir"}, {training.run_dir, "training.run_dir"}})
    if (fs::exists(p) && !fs::is_directory(p))
      throw Error("config", "bad_path", std::string(key) + " names a file, expected a directory: " + p);
}

std::string Config::hash() const {
  Config copy = *this;
  std::string text;
  for (const auto& f : fields(copy))
    if (f.hashed) text += std::string(f.section) + "." + f.key + "=" + render(f.slot) + "\n";
  return sha256_hex(text);
}

diffusion::ModelConfig Config::model_config(std::size_t motion_dim) const {
  diffusion::ModelConfig m;
  m.text.width = model.width;
  m.text.prompt_max = model.prompt_max;
  m.text.parsed_max = model.parsed_max;
  m.text.heads = model.heads;
  m.text.hgc.layers = model.hgc_layers;
  m.text.hgc.curvature = hyperbolic::Curvature(model.curvature);
  m.text.use_hgc = model.use_hgc;
  m.text.use_parsed = model.use_parsed;
  m.denoiser.motion_dim = motion_dim;
  m.denoiser.d_model = model.width;
  m.denoiser.blocks = model.blocks;
  m.denoiser.heads = model.heads;
  m.denoiser.max_frames = model.max_frames;
  m.denoiser.steps = diffusion.steps;
  m.T = diffusion.steps;
  m.beta_min = diffusion.beta_min;
  m.beta_max = diffusion.beta_max;
  m.condition_drop = diffusion.condition_drop;
  return m;
}

motion_data::CorpusOptions Config::corpus_options() const {
  motion_data::CorpusOptions o;
  o.clips = data.clips;
  o.seed = data.seed;
  o.frames = data.frames;
  o.fps = data.fps;
  o.test_fraction = data.test_fraction;
  return o;
}

diffusion::TrainOptions Config::train_options() const {
  diffusion::TrainOptions o;
  o.steps = training.steps;
  o.batch = training.batch;
  o.lr_max = training.lr_max;
  o.lr_min = training.lr_min;
  o.warmup = training.warmup;
  o.clip_norm = training.clip;
  o.seed = training.seed;
  return o;
}

diffusion::GuidanceConfig Config::guidance(double scale) const {
  return {scale, diffusion.sampling_steps, diffusion::BlendSpace::kEps};
}

evaluation::EvalOptions Config::eval_options() const {
  evaluation::EvalOptions o;
  o.repeats = eval.repeats;
  o.diversity_group = eval.diversity_group;
  o.mm_texts = eval.mm_texts;
  o.mm_samples = eval.mm_samples;
  o.mm_pairs = eval.mm_pairs;
  o.guidance = guidance(diffusion.guidance);
  o.seed = eval.seed;
  o.baselines = eval.baselines;
  return o;
}

evaluation::EvaluatorTrainOptions Config::evaluator_options() const {
  evaluation::EvaluatorTrainOptions o;
  o.steps = eval.evaluator_steps;
  o.batch = eval.evaluator_batch;
  o.lr = eval.evaluator_lr;
  o.seed = eval.evaluator_seed;
  return o;
}

semantic_parsing::LlmEndpointConfig Config::llm_config() const {
  semantic_parsing::LlmEndpointConfig c;
  c.base_url = parsing.llm_base_url;
  c.model = parsing.llm_model;
  c.api_key = semantic_parsing::LlmEndpointConfig::api_key_from_env(parsing.llm_key_env);
  c.timeout_s = parsing.llm_timeout;
  return c;
}

}  // namespace fgt2m::cli
