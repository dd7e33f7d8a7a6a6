#pragma once

#include <compare>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "retype/json_io.hpp"
#include "retype/typelib.hpp"

namespace retype {

class ElfFile;

enum class VariableKind : std::uint8_t { kParameter, kLocal, kGlobal };

std::string_view to_string(VariableKind kind);

/// Linkage name when the compiler emitted one, else the DWARF name; the entry
/// address disambiguates static functions that share a name.
struct FunctionKey {
  std::string name;
  std::uint64_t entry = 0;

  auto operator<=>(const FunctionKey&) const = default;
  /// `name@0x1139`
  std::string to_string() const;
};

struct DwarfVariable {
  std::string name;
  TypeDescriptor type;
  VariableKind kind = VariableKind::kLocal;
  std::optional<FunctionKey> function;
  /// False when DWARF gave no resolvable type; `type` is then void and the
  /// variable is not usable as ground truth, though its name still counts.
  bool typed = true;
};

struct DwarfFunction {
  FunctionKey key;
  std::vector<DwarfVariable> variables;
};

/// Ground truth for one binary.  Immutable after construction.
class DwarfIndex {
 public:
  DwarfIndex() = default;
  DwarfIndex(std::string binary_id, std::uint64_t pointer_size,
             std::vector<DwarfFunction> functions, std::vector<DwarfVariable> globals);

  const std::string& binary_id() const noexcept { return binary_id_; }
  std::uint64_t pointer_size() const noexcept { return pointer_size_; }
  const std::vector<DwarfFunction>& functions() const noexcept { return functions_; }
  const std::vector<DwarfVariable>& globals() const noexcept { return globals_; }
  const std::set<std::string, std::less<>>& declared_names() const noexcept {
    return declared_names_;
  }
  /// Non-fatal oddities seen while indexing (shadowed locals, untyped
  /// variables, skipped bitfields).
  const std::vector<std::string>& warnings() const noexcept { return warnings_; }
  void add_warning(std::string w) { warnings_.push_back(std::move(w)); }

  /// Exact key match first; otherwise the unique function with that name.
  const DwarfFunction* find_function(std::string_view name,
                                     std::optional<std::uint64_t> entry) const;

  /// Sidecar `<binary_id>.dwarfindex` contents.  Warnings are not persisted.
  Json to_json() const;
  static DwarfIndex from_json(const Json& j);

 private:
  std::string binary_id_;
  std::uint64_t pointer_size_ = kDefaultPointerSize;
  std::vector<DwarfFunction> functions_;
  std::vector<DwarfVariable> globals_;
  std::set<std::string, std::less<>> declared_names_;
  std::map<FunctionKey, std::size_t> by_key_;
  std::multimap<std::string, std::size_t, std::less<>> by_name_;
  std::vector<std::string> warnings_;
};

/// Parses .debug_info/.debug_abbrev (DWARF 4 and 5) of an unstripped ELF.
/// Throws Error(kNoDebugInfo) when the debug sections are absent,
/// Error(kMalformedDwarf) with the .debug_info offset on corrupt input, and
/// Error(kUnsupported) for other DWARF versions.
DwarfIndex index_binary(const std::filesystem::path& path,
                        std::uint64_t pointer_size = kDefaultPointerSize);
DwarfIndex index_elf(const ElfFile& elf, std::string binary_id,
                     std::uint64_t pointer_size = kDefaultPointerSize);

/// DWARF type of `name` as declared in `function` (parameters and locals,
/// lexical blocks flattened), falling back to globals.  Absent otherwise.
std::optional<TypeDescriptor> lookup(const DwarfIndex& index, std::string_view function,
                                     std::string_view name,
                                     std::optional<std::uint64_t> entry = std::nullopt);

/// Cached indexing: reuses `<cache_dir>/<sha256>.dwarfindex` when present.
DwarfIndex index_binary_cached(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& cache_dir,
                               std::uint64_t pointer_size = kDefaultPointerSize);

}  // namespace retype
