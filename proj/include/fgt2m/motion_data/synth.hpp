// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fgt2m/motion_data/motion.hpp"
#include "fgt2m/numerics/random.hpp"
#include "fgt2m/semantic_parsing/mock_parser.hpp"
#include "fgt2m/semantic_parsing/parsed_prompt.hpp"

namespace fgt2m::motion_data {

/// A clip recipe: clauses in prompt order ("then" starts a new time segment,
/// "and" shares the previous one), clip length and frame rate. Primitive
/// curves are documented in docs/motion.md.
struct SyntheticSpec {
  std::vector<semantic_parsing::ActionClause> clauses;
  std::size_t frames = 40;
  double fps = 20.0;
};

struct SynthClip {
  std::string prompt;
  semantic_parsing::ParsedPrompt parse;  // ground truth, source = fixture
  MotionSequence motion;
};

/// Throws on an invalid spec (unknown verb, empty clauses, frames < segments).
void validate_spec(const SyntheticSpec& spec);

/// Deterministic in (spec, seed); the seed only drives per-clip style jitter.
SynthClip synth_generate(const SyntheticSpec& spec, std::uint64_t seed);

/// Draws a spec from the corpus distribution (1 or 2 segments, optional
/// simultaneous clause, verb-compatible parts, adverbs and counts).
SyntheticSpec sample_spec(numerics::Rng& rng, std::size_t frames = 40, double fps = 20.0);

/// Pose of the toy skeleton at rest, used by tests and docs.
numerics::Tensor rest_positions();

}  // namespace fgt2m::motion_data
