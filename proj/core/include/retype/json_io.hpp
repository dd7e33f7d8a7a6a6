#pragma once

#include <filesystem>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>  // nlohmann/json, vendored

namespace retype {

using Json = nlohmann::json;

/// Compact single-line serialization with sorted keys; stable byte output.
std::string dump_line(const Json& j);

/// Parses one JSON document.  Syntax errors become Error(kParse) carrying the
/// byte offset and `context` (usually "path:line").
Json parse_json(std::string_view text, std::string_view context);

std::string read_file(const std::filesystem::path& path);
/// Writes atomically (temp file + rename) so readers never see partial output.
void write_file(const std::filesystem::path& path, std::string_view contents);

/// Calls `fn(line, line_number)` for each non-empty line of a line-delimited
/// file.  Missing files raise Error(kIo) naming the path.
void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn);

/// Accessors that raise Error(kValidation) naming `field` on absence or type
/// mismatch.
const Json& require(const Json& obj, std::string_view field);
std::string require_string(const Json& obj, std::string_view field);
std::uint64_t require_uint(const Json& obj, std::string_view field);
std::int64_t require_int(const Json& obj, std::string_view field);

}  // namespace retype
