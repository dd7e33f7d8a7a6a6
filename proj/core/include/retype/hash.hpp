#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

namespace retype {

/// 64-bit FNV-1a.  Used for body fingerprints and split hashing, where the
/// exact constants are part of the on-disk contract.
inline constexpr std::uint64_t kFnvOffsetBasis = 0xcbf29ce484222325ULL;
inline constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

class Fnv1a64 {
 public:
  void update(std::string_view bytes) noexcept {
    for (unsigned char c : bytes) {
      state_ ^= c;
      state_ *= kFnvPrime;
    }
  }
  void update_byte(unsigned char c) noexcept {
    state_ ^= c;
    state_ *= kFnvPrime;
  }
  std::uint64_t digest() const noexcept { return state_; }

 private:
  std::uint64_t state_ = kFnvOffsetBasis;
};

std::uint64_t fnv1a64(std::string_view bytes) noexcept;

/// splitmix64 finalizer; a bijection on 64-bit values.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Lower-case hex SHA-256.
std::string sha256_hex(std::span<const std::byte> bytes);
std::string sha256_hex(std::string_view text);
std::string sha256_file(const std::filesystem::path& path);

std::string hex64(std::uint64_t value);

}  // namespace retype
