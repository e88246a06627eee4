// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/motion_data/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "fgt2m/common/error.hpp"
#include "fgt2m/text_graph/template_parser.hpp"

namespace fgt2m::motion_data {

using semantic_parsing::ActionClause;
using semantic_parsing::BodyPart;
using semantic_parsing::Conj;
using B = BodyPart;
using numerics::Tensor;

namespace {

constexpr double kPi = std::numbers::pi;

// Per-part channels. Arms: pitch, roll. Legs: pitch, roll, knee. Head: pitch.
// Torso: pitch, height offset, vx, vz (m/s, heading frame), yaw rate (rad/s).
using Channels = std::array<double, 6>;
enum class Role { kNone, kSecondary, kActive };

struct Contribution {
  std::array<Channels, 6> value{};
  std::array<Role, 6> role{};

  void set(B p, Role r, const Channels& c) {
    value[static_cast<std::size_t>(p)] = c;
    role[static_cast<std::size_t>(p)] = r;
  }
};

struct ClauseStyle {
  double amp = 1.0;
  double phase = 0.0;
};

struct ClipStyle {
  double arm_rest_roll = 0.1;
  double stance_roll = 0.05;
};

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }
double smoothstep(double x) {
  x = clamp01(x);
  return x * x * (3 - 2 * x);
}
// 0 -> 1 -> 0 over w in [0, 1].
double bump(double w) { return w <= 0 || w >= 1 ? 0.0 : 0.5 - 0.5 * std::cos(2 * kPi * w); }
// Fades primitives in and out at segment edges.
double envelope(double u) { return smoothstep(std::min(u, 1.0 - u) / 0.12); }
double ramp(double u) { return smoothstep(u / 0.4); }

bool has(const ActionClause& c, const char* adverb) {
  return std::find(c.adverbs.begin(), c.adverbs.end(), adverb) != c.adverbs.end();
}

double speed_of(const ActionClause& c) { return has(c, "quickly") ? 1.5 : has(c, "slowly") ? 0.6 : 1.0; }
double height_of(const ActionClause& c) { return has(c, "high") ? 1.35 : 1.0; }
int reps_of(const ActionClause& c, int fallback) { return c.repeats > 0 ? c.repeats : fallback; }

// Phase within the current repetition; a quick clause finishes each repetition
// early and holds.
double rep_phase(double u, int reps, double speed) {
  const double w = u * reps - std::floor(u * reps);
  const double scaled = speed > 1 ? w * speed : w;
  return u >= 1 ? 1.0 : std::min(scaled, 1.0);
}

bool is_arm(B p) { return p == B::kLeftArm || p == B::kRightArm; }
bool is_leg(B p) { return p == B::kLeftLeg || p == B::kRightLeg; }
double side(B p) { return p == B::kLeftArm || p == B::kLeftLeg ? 1.0 : -1.0; }

void gait(const ActionClause& c, double u, double seconds, const ClauseStyle& st, bool run, Contribution& out,
          const std::vector<B>& active) {
  const double speed = speed_of(c);
  const double k = (run ? 3.0 : 2.0) * speed;
  const double leg_amp = (run ? 0.8 : 0.45) * st.amp;
  const double e = envelope(u);
  const double angle = 2 * kPi * k * u + st.phase;
  for (B p : active) {
    if (!is_leg(p)) continue;
    const double phi = p == B::kLeftLeg ? 0.0 : kPi;
    const double knee = (run ? 0.6 : 0.25) * std::max(0.0, std::sin(angle + phi + kPi / 2));
    out.set(p, Role::kActive, {e * leg_amp * std::sin(angle + phi), 0, e * knee});
  }
  for (B p : {B::kLeftArm, B::kRightArm}) {
    const double phi = p == B::kLeftArm ? kPi : 0.0;
    out.set(p, Role::kSecondary, {-e * (run ? 0.7 : 0.3) * st.amp * std::sin(angle + phi), 0, 0});
  }
  double base = (run ? 3.0 : 1.2) * speed;
  double vx = 0, vz = base;
  if (has(c, "backward")) vz = -0.7 * base;
  if (has(c, "sideways")) {
    vx = 0.7 * base;
    vz = 0;
  }
  const double yaw = has(c, "around") ? 2 * kPi / seconds : 0.0;
  const double bob = (run ? 0.06 : 0.02) * std::abs(std::sin(angle));
  out.set(B::kTorso, Role::kSecondary, {run ? 0.15 * e : 0.0, e * bob, e * vx, e * vz, e * yaw});
}

Contribution evaluate(const ActionClause& c, double u, double seconds, const ClauseStyle& st) {
  Contribution out;
  const auto active = semantic_parsing::active_parts(c);
  const double speed = speed_of(c);
  const double high = height_of(c);
  const double e = envelope(u);
  const std::string& v = c.verb;

  if (v == "walks" || v == "runs") {
    gait(c, u, seconds, st, v == "runs", out, active);
  } else if (v == "jumps") {
    const double w = rep_phase(u, reps_of(c, 1), speed);
    const double knee = w < 0.3 ? 0.6 * bump(w / 0.3) : w > 0.8 ? 0.4 * bump((w - 0.8) / 0.2) : 0.0;
    const double air = w >= 0.3 && w <= 0.8 ? std::sin(kPi * (w - 0.3) / 0.5) : 0.0;
    for (B p : active)
      if (is_leg(p)) out.set(p, Role::kActive, {0.3 * knee, 0, knee * st.amp});
    for (B p : {B::kLeftArm, B::kRightArm}) out.set(p, Role::kSecondary, {2.2 * st.amp * air, 0, 0});
    out.set(B::kTorso, Role::kSecondary,
            {0.2 * knee, 0.35 * high * st.amp * air - 0.25 * knee, 0, has(c, "forward") ? 1.2 * air : 0.0, 0});
  } else if (v == "kicks") {
    const double w = rep_phase(u, reps_of(c, 1), speed);
    for (B p : active) {
      if (is_leg(p)) out.set(p, Role::kActive, {1.2 * high * st.amp * bump(w), 0, 0.3 * bump(w)});
      if (is_arm(p)) out.set(p, Role::kActive, {1.2 * st.amp * bump(w), 0, 0});
    }
  } else if (v == "waves") {
    const int reps = reps_of(c, 1);
    const double osc = std::sin(2 * kPi * 3.0 * speed * reps * u + st.phase);
    for (B p : active) {
      if (is_arm(p)) out.set(p, Role::kActive, {0.2 * e, e * (2.2 * high * st.amp + 0.35 * osc), 0});
      if (is_leg(p)) out.set(p, Role::kActive, {e * (0.5 + 0.2 * osc), 0, 0});
    }
  } else if (v == "raises") {
    const int reps = reps_of(c, 1);
    const double prof = reps > 1 ? bump(rep_phase(u, reps, speed)) : ramp(u * speed);
    for (B p : active) {
      if (is_arm(p)) out.set(p, Role::kActive, {std::min(2.6 * high, 3.0) * st.amp * prof, 0, 0});
      if (is_leg(p)) out.set(p, Role::kActive, {1.0 * high * st.amp * prof, 0, 0.2 * prof});
      if (p == B::kHead) out.set(p, Role::kActive, {-0.4 * prof, 0, 0});
    }
  } else if (v == "punches") {
    const double w = rep_phase(u, reps_of(c, 2), std::max(speed, 1.2));
    for (B p : active) {
      if (is_arm(p)) out.set(p, Role::kActive, {1.5 * st.amp * bump(w), -0.1 * bump(w), 0});
      if (is_leg(p)) out.set(p, Role::kActive, {0.9 * st.amp * bump(w), 0, 0});
    }
  } else if (v == "squats") {
    const double d = bump(rep_phase(u, reps_of(c, 1), speed));
    for (B p : active)
      if (is_leg(p)) out.set(p, Role::kActive, {0.5 * d, 0, 1.0 * d * st.amp});
    for (B p : {B::kLeftArm, B::kRightArm}) out.set(p, Role::kSecondary, {1.4 * d, 0, 0});
    if (std::find(active.begin(), active.end(), B::kTorso) == active.end())
      out.set(B::kTorso, Role::kSecondary, {0.35 * d, -0.35 * d * st.amp, 0, 0, 0});
  } else if (v == "turns") {
    const double angle = has(c, "around") ? 2 * kPi : kPi;
    for (B p : active)
      if (p == B::kTorso) out.set(p, Role::kActive, {0, 0, 0, 0, e * speed * angle / (0.88 * seconds)});
    for (B p : {B::kLeftLeg, B::kRightLeg}) {
      const double phi = p == B::kLeftLeg ? 0.0 : kPi;
      out.set(p, Role::kSecondary, {e * 0.15 * std::sin(2 * kPi * 2 * u + phi), 0, e * 0.1});
    }
  } else if (v == "nods") {
    const double d = bump(rep_phase(u, reps_of(c, 2), speed));
    for (B p : active)
      if (p == B::kHead) out.set(p, Role::kActive, {0.35 * high * st.amp * d, 0, 0});
  } else if (v == "bends") {
    const double d = bump(rep_phase(u, reps_of(c, 1), speed));
    for (B p : active) {
      if (p == B::kTorso) out.set(p, Role::kActive, {1.1 * st.amp * d, -0.05 * d, 0, 0, 0});
      if (is_arm(p)) out.set(p, Role::kActive, {0.9 * st.amp * d, -0.2 * d, 0});
      if (is_leg(p)) out.set(p, Role::kActive, {0.7 * d, 0, 1.0 * st.amp * d});
      if (p == B::kHead) out.set(p, Role::kActive, {0.5 * d, 0, 0});
    }
  } else if (v == "claps") {
    const int reps = reps_of(c, 3);
    const double open = 0.5 + 0.5 * std::cos(2 * kPi * reps * speed * u);
    for (B p : active)
      if (is_arm(p)) out.set(p, Role::kActive, {1.3 * high * e * st.amp, e * (0.45 * open - 0.3), 0});
  } else if (v == "stretches") {
    const double r = ramp(u * speed);
    for (B p : active) {
      if (is_arm(p)) out.set(p, Role::kActive, {has(c, "high") ? 0.8 * r : 0.0, 1.5 * st.amp * r, 0});
      if (is_leg(p)) out.set(p, Role::kActive, {0, 0.45 * st.amp * r, 0});
    }
  } else if (v == "steps") {
    const int reps = reps_of(c, 1);
    const double w = rep_phase(u, reps, speed);
    const double dir = has(c, "backward") ? -1.0 : 1.0;
    const bool sideways = has(c, "sideways");
    for (B p : active)
      if (is_leg(p))
        out.set(p, Role::kActive, {sideways ? 0.0 : 0.5 * dir * bump(w), sideways ? 0.4 * bump(w) : 0.0, 0.4 * bump(w)});
    const double vel = 0.45 * reps / seconds * 2 * bump(w) * st.amp;
    out.set(B::kTorso, Role::kSecondary, {0, 0, sideways ? vel : 0.0, sideways ? 0.0 : dir * vel, 0});
  }
  return out;
}

struct PoseFrame {
  std::array<Channels, 6> part{};
};

void write_rotation(Tensor& m, std::size_t row, const PoseLayout& l, std::size_t joint, double yaw_like, double pitch) {
  const double ca = std::cos(yaw_like), sa = std::sin(yaw_like), cb = std::cos(pitch), sb = std::sin(pitch);
  const double r6[6] = {ca, sa, 0.0, -sa * cb, ca * cb, sb};
  for (std::size_t k = 0; k < 6; ++k) m(row, l.rotation(joint, k)) = r6[k];
}

// Forward kinematics of the toy skeleton into positions (y absolute height,
// x/z in the root heading frame), rotations and root channels.
void pose_to_row(const PoseFrame& f, const ClipStyle& style, double fps, const PoseLayout& l, Tensor& out,
                 std::size_t row) {
  const Channels& torso = f.part[static_cast<std::size_t>(B::kTorso)];
  const double root_h = 0.95 + torso[1];
  const double tp = torso[0];
  out(row, l.root_angular_velocity) = torso[4] / fps;
  out(row, l.root_velocity_x) = torso[2] / fps;
  out(row, l.root_velocity_z) = torso[3] / fps;
  out(row, l.root_height) = root_h;

  auto put = [&](std::size_t joint, double x, double y, double z) {
    out(row, l.position(joint, 0)) = x;
    out(row, l.position(joint, 1)) = y;
    out(row, l.position(joint, 2)) = z;
  };
  const double neck_y = root_h + 0.55 * std::cos(tp), neck_z = 0.55 * std::sin(tp);
  const double hp = tp + f.part[static_cast<std::size_t>(B::kHead)][0];
  put(kHead, 0.0, neck_y + 0.18 * std::cos(hp), neck_z + 0.18 * std::sin(hp));
  write_rotation(out, row, l, kHead, 0.0, hp);

  for (B p : {B::kLeftArm, B::kRightArm}) {
    const Channels& a = f.part[static_cast<std::size_t>(p)];
    const double s = side(p);
    const double pitch = a[0] + 0.5 * tp, roll = a[1] + style.arm_rest_roll;
    const std::size_t j = p == B::kLeftArm ? kLeftHand : kRightHand;
    put(j, s * 0.18 + 0.6 * s * std::sin(roll) * std::cos(pitch), neck_y - 0.6 * std::cos(roll) * std::cos(pitch),
        neck_z + 0.6 * std::sin(pitch));
    write_rotation(out, row, l, j, s * roll, pitch);
  }
  for (B p : {B::kLeftLeg, B::kRightLeg}) {
    const Channels& g = f.part[static_cast<std::size_t>(p)];
    const double s = side(p);
    const double pitch = g[0], roll = g[1] + style.stance_roll;
    const double len = 0.9 * (1.0 - 0.35 * g[2]);
    const std::size_t j = p == B::kLeftLeg ? kLeftFoot : kRightFoot;
    put(j, s * 0.1 + len * s * std::sin(roll) * std::cos(pitch), root_h - len * std::cos(roll) * std::cos(pitch),
        len * std::sin(pitch));
    write_rotation(out, row, l, j, s * roll, pitch);
  }
}

}  // namespace

Tensor rest_positions() {
  PoseLayout l = make_layout(kToyJoints);
  Tensor row({1, l.dim}, 0.0);
  pose_to_row(PoseFrame{}, ClipStyle{0.0, 0.0}, 20.0, l, row, 0);
  Tensor out({kToyJoints, 3}, 0.0);
  for (std::size_t j = 0; j < kToyJoints; ++j)
    for (std::size_t a = 0; a < 3; ++a) out(j, a) = row(0, l.position(j, a));
  return out;
}

void validate_spec(const SyntheticSpec& spec) {
  if (spec.clauses.empty()) throw Error("motion_data", "bad_spec", "spec has no clauses");
  if (!(spec.fps > 0)) throw Error("motion_data", "bad_spec", "fps must be positive");
  std::size_t segments = 0;
  for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
    if (!semantic_parsing::find_rule(spec.clauses[i].verb))
      throw Error("motion_data", "bad_spec", "no primitive for verb '" + spec.clauses[i].verb + "'");
    if (i == 0 || spec.clauses[i].conj == Conj::kThen) ++segments;
  }
  if (spec.frames < 2 * segments)
    throw Error("motion_data", "bad_spec", "need at least 2 frames per segment, have " + std::to_string(spec.frames));
}

SynthClip synth_generate(const SyntheticSpec& spec, std::uint64_t seed) {
  validate_spec(spec);
  numerics::Rng rng(seed);
  ClipStyle style{rng.uniform(0.05, 0.15), rng.uniform(0.02, 0.08)};
  std::vector<ClauseStyle> clause_style;
  for (std::size_t i = 0; i < spec.clauses.size(); ++i) clause_style.push_back({rng.uniform(0.9, 1.1), rng.uniform(0.0, 0.3)});

  // Segment index of every clause; "and" joins the previous segment.
  std::vector<std::size_t> segment_of;
  std::size_t segments = 0;
  for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
    if (i == 0 || spec.clauses[i].conj == Conj::kThen) ++segments;
    segment_of.push_back(segments - 1);
  }
  const std::size_t s_len = spec.frames;
  const double seg_frames = static_cast<double>(s_len) / static_cast<double>(segments);
  const double seg_seconds = seg_frames / spec.fps;

  PoseLayout l = make_layout(kToyJoints);
  // One extra frame so the last velocity is a forward difference too.
  Tensor full({s_len + 1, l.dim}, 0.0);
  for (std::size_t t = 0; t <= s_len; ++t) {
    const std::size_t seg = std::min(static_cast<std::size_t>(static_cast<double>(t) / seg_frames), segments - 1);
    const double u = (static_cast<double>(t) - static_cast<double>(seg) * seg_frames) / seg_frames;
    PoseFrame frame;
    std::array<Role, 6> owner{};
    for (std::size_t i = 0; i < spec.clauses.size(); ++i) {
      if (segment_of[i] != seg) continue;
      Contribution c = evaluate(spec.clauses[i], u, seg_seconds, clause_style[i]);
      for (std::size_t p = 0; p < 6; ++p) {
        if (c.role[p] == Role::kActive || (c.role[p] == Role::kSecondary && owner[p] == Role::kNone)) {
          frame.part[p] = c.value[p];
          owner[p] = c.role[p];
        }
      }
    }
    pose_to_row(frame, style, spec.fps, l, full, t);
  }
  Tensor frames({s_len, l.dim}, 0.0);
  for (std::size_t t = 0; t < s_len; ++t) {
    for (std::size_t c = 0; c < l.dim; ++c) frames(t, c) = full(t, c);
    for (std::size_t j = 0; j < l.joints; ++j)
      for (std::size_t a = 0; a < 3; ++a)
        frames(t, l.velocity(j, a)) = spec.fps * (full(t + 1, l.position(j, a)) - full(t, l.position(j, a)));
  }

  SynthClip clip{semantic_parsing::render_prompt(spec.clauses), {}, MotionSequence(l, std::move(frames), spec.fps)};
  clip.parse.prompt = semantic_parsing::normalize_prompt(clip.prompt);
  clip.parse.source = semantic_parsing::ParseSource::kFixture;
  semantic_parsing::describe_actions(spec.clauses, clip.parse);
  semantic_parsing::describe_semantics(text_graph::parse_template(clip.prompt), clip.parse);
  clip.parse = semantic_parsing::validated(clip.parse);
  return clip;
}

namespace {

struct VerbSampling {
  const char* verb;
  std::vector<const char*> adverbs;
  std::vector<std::vector<B>> part_options;
  bool counts;
};

const std::vector<VerbSampling>& sampling_table() {
  static const std::vector<VerbSampling> table = {
      {"walks", {"forward", "backward", "sideways", "around", "slowly", "quickly"}, {}, false},
      {"runs", {"forward", "backward", "around", "slowly", "quickly"}, {}, false},
      {"jumps", {"forward", "high", "quickly"}, {}, true},
      {"kicks", {"high", "quickly", "slowly"}, {{B::kLeftLeg}, {B::kRightLeg}}, true},
      {"waves", {"slowly", "quickly", "high"}, {{B::kLeftArm}, {B::kRightArm}, {B::kLeftArm, B::kRightArm}}, true},
      {"raises",
       {"slowly", "quickly", "high"},
       {{B::kLeftArm}, {B::kRightArm}, {B::kLeftArm, B::kRightArm}, {B::kLeftLeg}, {B::kRightLeg}},
       true},
      {"punches", {"quickly"}, {{B::kLeftArm}, {B::kRightArm}}, true},
      {"squats", {"slowly", "quickly"}, {}, true},
      {"turns", {"around", "slowly", "quickly"}, {}, false},
      {"nods", {"slowly", "quickly"}, {}, true},
      {"bends", {"slowly", "quickly"}, {{B::kLeftArm}, {B::kRightArm}, {B::kLeftLeg}, {B::kRightLeg}}, true},
      {"claps", {"quickly", "slowly", "high"}, {}, true},
      {"stretches", {"slowly", "high"}, {{B::kLeftArm, B::kRightArm}, {B::kLeftLeg, B::kRightLeg}}, false},
      {"steps", {"forward", "backward", "sideways"}, {{B::kLeftLeg}, {B::kRightLeg}}, true},
  };
  return table;
}

ActionClause sample_clause(numerics::Rng& rng) {
  const auto& table = sampling_table();
  const VerbSampling& vs = table[rng.index(table.size())];
  ActionClause c;
  c.verb = vs.verb;
  if (!vs.part_options.empty() && rng.bernoulli(0.6)) c.parts = vs.part_options[rng.index(vs.part_options.size())];
  if (rng.bernoulli(0.45)) c.adverbs.push_back(vs.adverbs[rng.index(vs.adverbs.size())]);
  if (vs.counts && rng.bernoulli(0.3)) c.repeats = rng.bernoulli(0.5) ? 2 : 3;
  return c;
}

bool disjoint(const ActionClause& a, const ActionClause& b) {
  auto pa = semantic_parsing::active_parts(a), pb = semantic_parsing::active_parts(b);
  for (B p : pa)
    if (std::find(pb.begin(), pb.end(), p) != pb.end()) return false;
  return true;
}

}  // namespace

SyntheticSpec sample_spec(numerics::Rng& rng, std::size_t frames, double fps) {
  SyntheticSpec spec;
  spec.frames = frames;
  spec.fps = fps;
  const std::size_t segments = rng.bernoulli(0.6) ? 1 : 2;
  for (std::size_t s = 0; s < segments; ++s) {
    ActionClause first = sample_clause(rng);
    first.conj = Conj::kThen;
    spec.clauses.push_back(first);
    if (spec.clauses.size() < 3 && rng.bernoulli(0.25)) {
      for (int attempt = 0; attempt < 4; ++attempt) {
        ActionClause extra = sample_clause(rng);
        if (extra.verb == first.verb || !disjoint(first, extra)) continue;
        extra.conj = Conj::kAnd;
        spec.clauses.push_back(extra);
        break;
      }
    }
  }
  return spec;
}

}  // namespace fgt2m::motion_data
