// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <ostream>
#include <string>

#include "fgt2m/cli/config.hpp"

namespace fgt2m::cli {

struct SampleOptions {
  std::string checkpoint;  // empty: <run_dir>/model.fgck
  std::string prompt;
  std::string out;
  std::string bvh;  // empty: no BVH export
  std::uint64_t seed = 0;
  std::optional<double> scale;
  std::optional<std::size_t> frames;
};

struct EvalCommandOptions {
  std::string checkpoint;
  std::string out;  // empty: <run_dir>/metrics.json
  bool force = false;
};

struct InspectOptions {
  std::string prompt;
  std::string checkpoint;  // empty: freshly initialized encoder
  bool json = false;
};

/// Progress lines go to `log`; primary results are files.
void cmd_gen_corpus(const Config& cfg, bool force, std::ostream& log);
void cmd_train(const Config& cfg, bool force, std::ostream& log);
void cmd_sample(const Config& cfg, const SampleOptions& opts, std::ostream& log);
void cmd_eval(const Config& cfg, const EvalCommandOptions& opts, std::ostream& log);
/// Dependency tree, depth layers, 15-slot parse and per-depth distances.
std::string cmd_inspect(const Config& cfg, const InspectOptions& opts);

/// Box-drawing rendering of a dependency tree, one token per line.
std::string ascii_tree(const text_graph::DependencyGraph& g);

/// Full command line. Exit codes: 0 success, 1 usage or config error,
/// 2 runtime error; errors go to `err` as "E:<module>:<code> <message>".
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace fgt2m::cli
