#include "retype/json_io.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "retype/error.hpp"

namespace retype {

std::string dump_line(const Json& j) {
  // nlohmann::json objects are std::map-backed, so keys come out sorted.
  return j.dump(-1, ' ', false, Json::error_handler_t::strict);
}

Json parse_json(std::string_view text, std::string_view context) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorKind::kParse, std::string(context) + ": syntax error at byte " +
                                       std::to_string(e.byte) + ": " + e.what());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return std::move(ss).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp" + std::to_string(std::hash<std::thread::id>{}(std::this_thread::get_id()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::kIo, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw Error(ErrorKind::kIo, "short write to " + path.string());
  }
  std::filesystem::rename(tmp, path);
}

void for_each_line(const std::filesystem::path& path,
                   const std::function<void(std::string_view, std::size_t)>& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    fn(line, number);
  }
}

const Json& require(const Json& obj, std::string_view field) {
  if (!obj.is_object()) {
    throw Error(ErrorKind::kValidation,
                "expected an object containing field '" + std::string(field) + "'");
  }
  auto it = obj.find(field);
  if (it == obj.end()) {
    throw Error(ErrorKind::kValidation, "missing field '" + std::string(field) + "'");
  }
  return *it;
}

std::string require_string(const Json& obj, std::string_view field) {
  const Json& v = require(obj, field);
  if (!v.is_string()) {
    throw Error(ErrorKind::kValidation,
                "field '" + std::string(field) + "' must be a string");
  }
  return v.get<std::string>();
}

std::uint64_t require_uint(const Json& obj, std::string_view field) {
  const Json& v = require(obj, field);
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    throw Error(ErrorKind::kValidation,
                "field '" + std::string(field) + "' must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::int64_t require_int(const Json& obj, std::string_view field) {
  const Json& v = require(obj, field);
  if (!v.is_number_integer()) {
    throw Error(ErrorKind::kValidation,
                "field '" + std::string(field) + "' must be an integer");
  }
  return v.get<std::int64_t>();
}

}  // namespace retype
