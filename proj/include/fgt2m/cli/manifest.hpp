// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <map>
#include <string>

#include <nlohmann/json.hpp>

namespace fgt2m::cli {

/// Provenance record of one command run, written once when it finishes.
struct RunManifest {
  std::string command;
  std::string config_hash;
  std::string code_version;
  std::uint64_t seed = 0;
  std::string started;   // ISO-8601 UTC
  std::string finished;
  std::map<std::string, std::string> artifacts;  // path -> SHA-256

  /// Stamps `started` and the code version.
  static RunManifest begin(std::string command, std::string config_hash, std::uint64_t seed);

  void add_artifact(const std::string& path);
  nlohmann::json to_json() const;
  static RunManifest from_json(const nlohmann::json& j);
  /// Stamps `finished` and writes through a temporary file.
  void write(const std::string& path);
};

std::string utc_now();
std::string code_version();

}  // namespace fgt2m::cli
