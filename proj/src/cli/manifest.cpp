// SPDX-License-Identifier: Apache-2.0
#include "fgt2m/cli/manifest.hpp"

#include <chrono>
#include <ctime>

#include "fgt2m/common/binary_io.hpp"
#include "fgt2m/common/error.hpp"

#ifndef FGT2M_VERSION
#define FGT2M_VERSION "unknown"
#endif

namespace fgt2m::cli {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string code_version() { return FGT2M_VERSION; }

RunManifest RunManifest::begin(std::string command, std::string config_hash, std::uint64_t seed) {
  RunManifest m;
  m.command = std::move(command);
  m.config_hash = std::move(config_hash);
  m.code_version = cli::code_version();
  m.seed = seed;
  m.started = utc_now();
  return m;
}

void RunManifest::add_artifact(const std::string& path) { artifacts[path] = sha256_hex(read_file(path, "cli")); }

nlohmann::json RunManifest::to_json() const {
  return {{"schema", "fgt2m.run_manifest.v1"},
          {"command", command},
          {"config_hash", config_hash},
          {"code_version", code_version},
          {"seed", seed},
          {"started", started},
          {"finished", finished},
          {"artifacts", artifacts}};
}

RunManifest RunManifest::from_json(const nlohmann::json& j) {
  if (!j.is_object() || j.value("schema", "") != "fgt2m.run_manifest.v1")
    throw Error("cli", "bad_manifest", "not a run manifest");
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config_hash = j.at("config_hash").get<std::string>();
  m.code_version = j.at("code_version").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  m.artifacts = j.at("artifacts").get<std::map<std::string, std::string>>();
  return m;
}

void RunManifest::write(const std::string& path) {
  finished = utc_now();
  write_file_atomic(path, to_json().dump(2) + "\n", "cli");
}

}  // namespace fgt2m::cli
