#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retype {

struct ElfSection {
  std::string name;
  std::uint32_t type = 0;
  std::uint64_t flags = 0;
  std::uint64_t address = 0;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

struct ElfSymbol {
  std::string name;
  std::uint64_t value = 0;
  std::uint64_t size = 0;
  std::uint8_t type = 0;  // STT_*
  std::uint8_t binding = 0;
  std::uint16_t section_index = 0;
};

inline constexpr std::uint8_t kSttFunc = 2;

/// Read-only view of a little-endian ELF32/ELF64 file held in memory.
class ElfFile {
 public:
  /// Throws Error(kParse) for non-ELF input, Error(kUnsupported) for
  /// big-endian files, Error(kIo) when the file cannot be read.
  static ElfFile open(const std::filesystem::path& path);
  static ElfFile from_bytes(std::vector<std::byte> bytes, std::string display_name);

  bool is_64bit() const noexcept { return is_64_; }
  std::uint16_t machine() const noexcept { return machine_; }
  const std::string& display_name() const noexcept { return name_; }
  std::span<const std::byte> bytes() const noexcept { return bytes_; }

  const std::vector<ElfSection>& sections() const noexcept { return sections_; }
  const ElfSection* find_section(std::string_view name) const;
  /// Contents of a section, or nullopt when absent.  SHT_NOBITS sections
  /// yield an empty span.
  std::optional<std::span<const std::byte>> section_data(std::string_view name) const;

  /// Entries of .symtab (falls back to .dynsym).
  std::vector<ElfSymbol> symbols() const;

 private:
  ElfFile() = default;
  void parse();

  std::vector<std::byte> bytes_;
  std::string name_;
  bool is_64_ = true;
  std::uint16_t machine_ = 0;
  std::vector<ElfSection> sections_;
};

}  // namespace retype
