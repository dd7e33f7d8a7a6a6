#include "retype/manifest.hpp"

#include <chrono>
#include <ctime>

#include "retype/error.hpp"
#include "retype/hash.hpp"

namespace retype {

std::string_view tool_version() { return RETYPE_VERSION; }

namespace {

Json content(const RunManifest& m) {
  return Json{{"tool_version", std::string(tool_version())},
              {"subcommand", m.subcommand},
              {"inputs", m.inputs},
              {"seed", m.seed},
              {"config", m.config},
              {"summary", m.summary}};
}

}  // namespace

std::string RunManifest::hash() const { return sha256_hex(content(*this).dump()); }

Json RunManifest::to_json() const {
  Json j = content(*this);
  j["hash"] = hash();
  return j;
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.subcommand = require_string(j, "subcommand");
  const Json& inputs = require(j, "inputs");
  if (!inputs.is_object()) throw Error(ErrorKind::kValidation, "field 'inputs' must be an object");
  for (const auto& [k, v] : inputs.items()) m.inputs[k] = v.get<std::string>();
  m.seed = require_uint(j, "seed");
  m.config = require(j, "config");
  m.summary = require(j, "summary");
  if (auto it = j.find("hash"); it != j.end() && it->get<std::string>() != m.hash()) {
    throw Error(ErrorKind::kValidation, "manifest hash does not match its content");
  }
  return m;
}

std::string utc_now() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string write_manifest(const std::filesystem::path& path, const RunManifest& m,
                           const std::string& started_utc) {
  const Json j = m.to_json();
  write_file(path, j.dump(2) + "\n");
  auto log = path;
  log.replace_extension(".runlog.json");
  write_file(log, Json{{"manifest", j["hash"]}, {"started", started_utc}, {"finished", utc_now()}}
                          .dump(2) +
                      "\n");
  return j["hash"].get<std::string>();
}

}  // namespace retype
