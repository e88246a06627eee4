// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/motion_data/motion.hpp"

#include <cmath>
#include <cstdio>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"

namespace fgt2m::motion_data {

using numerics::Tensor;

PoseLayout make_layout(std::size_t joints) {
  if (joints < 2) throw Error("motion_data", "bad_joints", "joint count must be at least 2, got " + std::to_string(joints));
  PoseLayout l;
  l.joints = joints;
  l.velocities = l.positions + 3 * joints;
  l.rotations = l.velocities + 3 * joints;
  l.dim = l.rotations + 6 * joints;
  return l;
}

const std::vector<std::string>& toy_joint_names() {
  static const std::vector<std::string> names = {"head", "left_hand", "right_hand", "left_foot", "right_foot"};
  return names;
}

MotionSequence::MotionSequence(PoseLayout layout_, Tensor frames_, double fps_)
    : layout(layout_), frames(std::move(frames_)), fps(fps_) {
  if (frames.rank() != 2 || frames.cols() != layout.dim)
    throw Error("motion_data", "shape",
                "motion frames " + numerics::shape_string(frames.shape()) + " do not match D=" + std::to_string(layout.dim));
  if (!(fps > 0)) throw Error("motion_data", "bad_fps", "fps must be positive");
  if (!frames.all_finite()) throw Error("motion_data", "non_finite", "motion contains non-finite values");
}

std::string serialize(const MotionSequence& m) {
  ByteWriter w;
  w.raw("FGM2");
  w.u16(kMotionFormatVersion);
  w.u16(static_cast<std::uint16_t>(m.layout.joints));
  w.u32(static_cast<std::uint32_t>(m.length()));
  w.f32(static_cast<float>(m.fps));
  for (double v : m.frames.values()) w.f64(v);
  return w.str();
}

MotionSequence deserialize(std::string_view bytes) {
  ByteReader r(bytes, "motion_data");
  if (r.raw(4) != "FGM2") throw Error("motion_data", "bad_magic", "not an FGM2 motion file");
  const auto version = r.u16();
  if (version != kMotionFormatVersion)
    throw Error("motion_data", "bad_version", "unsupported FGM2 version " + std::to_string(version));
  const auto joints = r.u16();
  const auto frames = r.u32();
  const double fps = r.f32();
  PoseLayout layout = make_layout(joints);
  if (frames == 0) throw Error("motion_data", "empty", "motion has no frames");
  std::vector<double> data(static_cast<std::size_t>(frames) * layout.dim);
  for (double& v : data) v = r.f64();
  if (r.remaining() != 0)
    throw Error("motion_data", "trailing_bytes", std::to_string(r.remaining()) + " unexpected bytes at offset " +
                                                     std::to_string(r.offset()));
  return MotionSequence(layout, Tensor({frames, layout.dim}, std::move(data)), fps);
}

void save_motion(const std::string& path, const MotionSequence& m) { write_file_atomic(path, serialize(m), "motion_data"); }

MotionSequence load_motion(const std::string& path) { return deserialize(read_file(path, "motion_data")); }

NormStats normalize_stats(const std::vector<MotionSequence>& corpus) {
  if (corpus.size() < 2) throw Error("motion_data", "empty_corpus", "normalization needs at least 2 sequences");
  const std::size_t d = corpus.front().layout.dim;
  std::vector<double> sum(d, 0.0), sq(d, 0.0);
  double count = 0;
  for (const auto& m : corpus) {
    if (m.layout.dim != d) throw Error("motion_data", "shape", "corpus mixes pose layouts");
    for (std::size_t r = 0; r < m.length(); ++r)
      for (std::size_t c = 0; c < d; ++c) sum[c] += m.frames(r, c);
    count += static_cast<double>(m.length());
  }
  NormStats s;
  s.mean.resize(d);
  for (std::size_t c = 0; c < d; ++c) s.mean[c] = sum[c] / count;
  for (const auto& m : corpus)
    for (std::size_t r = 0; r < m.length(); ++r)
      for (std::size_t c = 0; c < d; ++c) {
        const double e = m.frames(r, c) - s.mean[c];
        sq[c] += e * e;
      }
  s.std.resize(d);
  for (std::size_t c = 0; c < d; ++c) s.std[c] = std::max(std::sqrt(sq[c] / count), NormStats::kStdFloor);
  return s;
}

Tensor NormStats::apply(const Tensor& frames) const {
  if (frames.cols() != mean.size()) throw Error("motion_data", "shape", "stats width does not match frames");
  Tensor out = frames;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = (out(r, c) - mean[c]) / std[c];
  return out;
}

Tensor NormStats::invert(const Tensor& normalized) const {
  if (normalized.cols() != mean.size()) throw Error("motion_data", "shape", "stats width does not match frames");
  Tensor out = normalized;
  for (std::size_t r = 0; r < out.rows(); ++r)
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) = out(r, c) * std[c] + mean[c];
  return out;
}

nlohmann::json NormStats::to_json() const { return {{"mean", mean}, {"std", std}}; }

NormStats NormStats::from_json(const nlohmann::json& j) {
  NormStats s;
  try {
    s.mean = j.at("mean").get<std::vector<double>>();
    s.std = j.at("std").get<std::vector<double>>();
  } catch (const nlohmann::json::exception& e) {
    throw Error("motion_data", "bad_stats", e.what());
  }
  if (s.mean.size() != s.std.size() || s.mean.empty()) throw Error("motion_data", "bad_stats", "mean/std size mismatch");
  for (double v : s.std)
    if (!(v >= kStdFloor)) throw Error("motion_data", "bad_stats", "std below floor");
  return s;
}

std::string to_bvh(const MotionSequence& m, const std::vector<std::string>& joint_names) {
  const PoseLayout& l = m.layout;
  if (joint_names.size() != l.joints) throw Error("motion_data", "shape", "joint name count does not match layout");
  std::string out = "HIERARCHY\nROOT root\n{\n  OFFSET 0 0 0\n  CHANNELS 3 Xposition Yposition Zposition\n";
  for (const auto& name : joint_names)
    out += "  JOINT " + name + "\n  {\n    OFFSET 0 0 0\n    CHANNELS 3 Xposition Yposition Zposition\n"
           "    End Site\n    {\n      OFFSET 0 0 0\n    }\n  }\n";
  out += "}\nMOTION\nFrames: " + std::to_string(m.length()) + "\n";
  char buf[64];
  std::snprintf(buf, sizeof buf, "Frame Time: %.6f\n", 1.0 / m.fps);
  out += buf;
  double yaw = 0, x = 0, z = 0;
  for (std::size_t t = 0; t < m.length(); ++t) {
    const double c = std::cos(yaw), s = std::sin(yaw);
    auto emit = [&](double v) {
      std::snprintf(buf, sizeof buf, "%.6f ", v);
      out += buf;
    };
    emit(x);
    emit(m.frames(t, l.root_height));
    emit(z);
    // Joint positions are stored in the root's heading frame; BVH wants them
    // relative to the root's world position.
    for (std::size_t j = 0; j < l.joints; ++j) {
      const double px = m.frames(t, l.position(j, 0)), py = m.frames(t, l.position(j, 1)),
                   pz = m.frames(t, l.position(j, 2));
      emit(c * px + s * pz);
      emit(py - m.frames(t, l.root_height));
      emit(-s * px + c * pz);
    }
    out.back() = '\n';
    const double vx = m.frames(t, l.root_velocity_x), vz = m.frames(t, l.root_velocity_z);
    x += c * vx + s * vz;
    z += -s * vx + c * vz;
    yaw += m.frames(t, l.root_angular_velocity);
  }
  return out;
}

}  // namespace fgt2m::motion_data
