// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <string>

#include <nlohmann/json.hpp>

#include "fgt2m/numerics/parameters.hpp"

namespace fgt2m::numerics {

/// Named parameter arrays plus free-form JSON metadata.
///
/// On disk ("FGCK", all integers little-endian):
///   magic "FGCK" | u16 version | u32 metadata length | metadata JSON (UTF-8)
///   | u32 parameter count | per parameter, in name order:
///     u16 name length | name | u8 rank | u32 extent x rank | f64 x size
/// The checkpoint hash is the SHA-256 of the whole file.
struct Checkpoint {
  static constexpr std::uint16_t kVersion = 1;

  nlohmann::json metadata = nlohmann::json::object();
  ParameterStore params;

  std::string serialize() const;
  static Checkpoint deserialize(const std::string& bytes);

  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

}  // namespace fgt2m::numerics
