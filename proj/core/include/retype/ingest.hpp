#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "retype/json_io.hpp"
#include "retype/typelib.hpp"

namespace retype {

inline constexpr int kInterchangeSchema = 1;

enum class StorageKind : std::uint8_t { kStack, kRegister, kUnique, kRam };
enum class View : std::uint8_t { kDebug, kStripped };
enum class DecompileStatus : std::uint8_t { kOk, kFailed, kTimeout };

std::string_view to_string(StorageKind kind);
std::string_view to_string(View view);
std::string_view to_string(DecompileStatus status);

/// Where the decompiler keeps a variable.  `value` is a frame-relative offset
/// for stack storage and a register/space offset otherwise.
struct StorageLocation {
  StorageKind kind = StorageKind::kStack;
  std::int64_t value = 0;
  std::uint64_t size = 0;

  auto operator<=>(const StorageLocation&) const = default;
};

struct VariableRecord {
  std::string decomp_name;
  StorageLocation storage;
  TypeDescriptor decomp_type;

  std::uint64_t size() const noexcept { return storage.size; }
};

/// Sentinel that stands for every placeholder when hashing bodies.  `@` never
/// occurs in a non-placeholder token (string literals escape it as `\x40`).
inline constexpr std::string_view kPlaceholderSentinel = "@@var@@";
inline constexpr std::string_view kSelfSentinel = "@@self@@";

struct Token {
  std::string text;
  /// Index into FunctionRecord::variables when this token is a placeholder.
  std::optional<std::size_t> variable;

  bool is_placeholder() const noexcept { return variable.has_value(); }
};

struct TokenSequence {
  std::vector<Token> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
  std::size_t placeholder_count() const noexcept;
  /// Placeholder positions of one variable, in order.
  std::vector<std::size_t> positions_of(std::size_t variable) const;
};

struct FunctionRecord {
  std::string binary_id;
  std::string function;  // decompiler's function name
  std::uint64_t entry = 0;
  View view = View::kStripped;
  DecompileStatus status = DecompileStatus::kOk;
  std::string raw_code;
  TokenSequence tokens;
  std::vector<VariableRecord> variables;

  /// `name@0x1139`, unique within a binary.
  std::string function_id() const;
  std::optional<std::size_t> variable_index(std::string_view name) const;
};

/// C-like lexical tokens of `code`: identifiers, keywords, numeric literals
/// (verbatim), string/char literals, operators and punctuation.  Comments and
/// whitespace are dropped.  Total on arbitrary input.
std::vector<std::string> lex_c(std::string_view code);

/// Lexes `raw_code` and binds every identifier equal to a variable's
/// decomp_name to that variable.
TokenSequence canonicalize_tokens(std::string_view raw_code,
                                  std::span<const VariableRecord> variables);

/// 64-bit FNV-1a over token texts, each followed by a NUL byte, with every
/// placeholder replaced by kPlaceholderSentinel.  The empty sequence hashes to
/// the FNV offset basis 0xcbf29ce484222325.  When `self_name` is non-empty,
/// tokens spelling it hash as kSelfSentinel, so identical bodies decompiled at
/// different addresses (FUN_00101139 vs FUN_00101200) still match.
std::uint64_t body_fingerprint(const TokenSequence& t, std::string_view self_name = {});

/// One interchange line -> validated record.  Syntax errors raise
/// Error(kParse) with the byte offset; schema violations raise
/// Error(kValidation) naming the field.
FunctionRecord parse_export_record(std::string_view line, std::string_view context = "record");
FunctionRecord record_from_json(const Json& j, std::string_view context = "record");
Json record_to_json(const FunctionRecord& r);
/// Single-line form; parse_export_record(serialize_record(r)) reproduces r.
std::string serialize_record(const FunctionRecord& r);

std::string format_entry(std::uint64_t entry);

}  // namespace retype
