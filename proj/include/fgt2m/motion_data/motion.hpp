// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "fgt2m/numerics/tensor.hpp"

namespace fgt2m::motion_data {

/// Channel layout of one pose frame: root angular velocity, root x/z velocity,
/// root height, joint positions, joint velocities, joint 6D rotations.
struct PoseLayout {
  std::size_t joints = 0;
  std::size_t root_angular_velocity = 0;
  std::size_t root_velocity_x = 1;
  std::size_t root_velocity_z = 2;
  std::size_t root_height = 3;
  std::size_t positions = 4;
  std::size_t velocities = 0;
  std::size_t rotations = 0;
  std::size_t dim = 0;

  std::size_t position(std::size_t joint, std::size_t axis) const { return positions + 3 * joint + axis; }
  std::size_t velocity(std::size_t joint, std::size_t axis) const { return velocities + 3 * joint + axis; }
  std::size_t rotation(std::size_t joint, std::size_t k) const { return rotations + 6 * joint + k; }

  friend bool operator==(const PoseLayout&, const PoseLayout&) = default;
};

PoseLayout make_layout(std::size_t joints);

/// Toy skeleton markers, in channel order.
enum Joint : std::size_t { kHead = 0, kLeftHand = 1, kRightHand = 2, kLeftFoot = 3, kRightFoot = 4, kToyJoints = 5 };
const std::vector<std::string>& toy_joint_names();

struct MotionSequence {
  PoseLayout layout;
  numerics::Tensor frames;  // S x D
  double fps = 20.0;

  MotionSequence(PoseLayout layout, numerics::Tensor frames, double fps = 20.0);
  std::size_t length() const { return frames.rows(); }

  friend bool operator==(const MotionSequence&, const MotionSequence&) = default;
};

inline constexpr std::uint16_t kMotionFormatVersion = 1;

std::string serialize(const MotionSequence& m);
MotionSequence deserialize(std::string_view bytes);
void save_motion(const std::string& path, const MotionSequence& m);
MotionSequence load_motion(const std::string& path);

/// Per-channel z-normalization with a floor on the standard deviation.
struct NormStats {
  std::vector<double> mean;
  std::vector<double> std;

  static constexpr double kStdFloor = 1e-6;

  numerics::Tensor apply(const numerics::Tensor& frames) const;
  numerics::Tensor invert(const numerics::Tensor& normalized) const;
  nlohmann::json to_json() const;
  static NormStats from_json(const nlohmann::json& j);
};

NormStats normalize_stats(const std::vector<MotionSequence>& corpus);

/// Positions-only BVH: every marker is a child of the root with position
/// channels only. Root translation is integrated from the velocity channels.
std::string to_bvh(const MotionSequence& m, const std::vector<std::string>& joint_names);

}  // namespace fgt2m::motion_data
