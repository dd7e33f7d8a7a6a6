#pragma once

#include <filesystem>
#include <string>

#include "retype/model/retyper.hpp"

namespace retype::model {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: "RETYPECK", u32 version, u64 header length, JSON header (config,
/// lexicon, vocabulary, lexicon digest, manifest hash, tensor shapes), the
/// tensors as little-endian doubles in Parameters order, then a u64 FNV-1a
/// checksum of everything before it.
std::string serialize_checkpoint(const Retyper& model, const std::string& manifest_hash);
void save_checkpoint(const std::filesystem::path& path, const Retyper& model,
                     const std::string& manifest_hash);

struct LoadedCheckpoint {
  Retyper model;
  std::string manifest_hash;
};

/// Throws Error(kValidation) on a bad magic, version, checksum, shape or
/// lexicon digest.
LoadedCheckpoint parse_checkpoint(std::string_view bytes, std::string_view context);
LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace retype::model
