#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>

#include "retype/json_io.hpp"

namespace retype {

std::string_view tool_version();

/// Provenance of one subcommand run.  Deliberately timestamp-free so that a
/// rerun on unchanged inputs hashes identically; wall-clock times go to the
/// run log beside it.
struct RunManifest {
  std::string subcommand;
  std::map<std::string, std::string> inputs;  // label -> sha256
  std::uint64_t seed = 0;
  Json config = Json::object();
  Json summary = Json::object();

  Json to_json() const;  // includes "hash"
  std::string hash() const;
  static RunManifest from_json(const Json& j);
};

/// Writes the manifest and a `<name>.runlog.json` sidecar next to it.
/// Returns the manifest hash.
std::string write_manifest(const std::filesystem::path& path, const RunManifest& m,
                           const std::string& started_utc);

std::string utc_now();

}  // namespace retype
