#include "retype/ingest.hpp"

#include <charconv>
#include <set>

#include "retype/error.hpp"
#include "retype/type_json.hpp"

namespace retype {

std::string_view to_string(StorageKind kind) {
  switch (kind) {
    case StorageKind::kStack: return "stack";
    case StorageKind::kRegister: return "register";
    case StorageKind::kUnique: return "unique";
    case StorageKind::kRam: return "ram";
  }
  return "?";
}

std::string_view to_string(View view) {
  return view == View::kDebug ? "debug" : "stripped";
}

std::string_view to_string(DecompileStatus status) {
  switch (status) {
    case DecompileStatus::kOk: return "ok";
    case DecompileStatus::kFailed: return "failed";
    case DecompileStatus::kTimeout: return "timeout";
  }
  return "?";
}

std::string format_entry(std::uint64_t entry) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(entry));
  return buf;
}

std::string FunctionRecord::function_id() const { return function + "@" + format_entry(entry); }

std::optional<std::size_t> FunctionRecord::variable_index(std::string_view name) const {
  for (std::size_t i = 0; i < variables.size(); ++i) {
    if (variables[i].decomp_name == name) return i;
  }
  return std::nullopt;
}

namespace {

[[noreturn]] void invalid(std::string_view context, const std::string& what) {
  throw Error(ErrorKind::kValidation, std::string(context) + ": " + what);
}

template <typename Fn>
auto in_context(std::string_view context, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kValidation) throw;
    throw Error(ErrorKind::kValidation, std::string(context) + ": " + e.what());
  }
}

StorageKind storage_kind_from(const std::string& s, std::string_view context) {
  if (s == "stack") return StorageKind::kStack;
  if (s == "register") return StorageKind::kRegister;
  if (s == "unique") return StorageKind::kUnique;
  if (s == "ram") return StorageKind::kRam;
  invalid(context, "field 'storage.kind': unknown storage kind '" + s + "'");
}

std::uint64_t parse_entry(const Json& j, std::string_view context) {
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (!j.is_string()) invalid(context, "field 'entry' must be a hex string");
  const auto s = j.get<std::string>();
  std::string_view digits = s;
  if (digits.starts_with("0x") || digits.starts_with("0X")) digits.remove_prefix(2);
  std::uint64_t v = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v, 16);
  if (digits.empty() || ec != std::errc() || ptr != digits.data() + digits.size()) {
    invalid(context, "field 'entry': bad address '" + s + "'");
  }
  return v;
}

}  // namespace

FunctionRecord record_from_json(const Json& j, std::string_view context) {
  if (!j.is_object()) invalid(context, "record must be a JSON object");
  FunctionRecord r;
  in_context(context, [&] {
    const auto schema = require(j, "schema");
    if (!schema.is_number_integer() || schema.get<std::int64_t>() != kInterchangeSchema) {
      throw Error(ErrorKind::kValidation, "field 'schema': unsupported version " + schema.dump() +
                                              " (expected " +
                                              std::to_string(kInterchangeSchema) + ")");
    }
    r.binary_id = require_string(j, "binary");
    r.function = require_string(j, "function");
    r.raw_code = require_string(j, "code");
    const auto view = require_string(j, "view");
    if (view == "debug") {
      r.view = View::kDebug;
    } else if (view == "stripped") {
      r.view = View::kStripped;
    } else {
      throw Error(ErrorKind::kValidation, "field 'view': unknown view '" + view + "'");
    }
    const auto status = require_string(j, "status");
    if (status == "ok") {
      r.status = DecompileStatus::kOk;
    } else if (status == "failed") {
      r.status = DecompileStatus::kFailed;
    } else if (status == "timeout") {
      r.status = DecompileStatus::kTimeout;
    } else {
      throw Error(ErrorKind::kValidation, "field 'status': unknown status '" + status + "'");
    }
    return 0;
  });
  r.entry = parse_entry(in_context(context, [&]() -> const Json& { return require(j, "entry"); }),
                        context);
  if (r.binary_id.empty()) invalid(context, "field 'binary' must not be empty");
  if (r.function.empty()) invalid(context, "field 'function' must not be empty");

  const Json& vars = in_context(context, [&]() -> const Json& { return require(j, "variables"); });
  if (!vars.is_array()) invalid(context, "field 'variables' must be an array");
  std::set<std::string> names;
  for (std::size_t i = 0; i < vars.size(); ++i) {
    const std::string where = "variables[" + std::to_string(i) + "]";
    const Json& v = vars[i];
    VariableRecord var;
    in_context(std::string(context) + ": " + where, [&] {
      var.decomp_name = require_string(v, "name");
      const Json& st = require(v, "storage");
      var.storage.kind = storage_kind_from(require_string(st, "kind"), "storage");
      var.storage.value = require_int(st, "value");
      var.storage.size = require_uint(st, "size");
      return 0;
    });
    if (var.decomp_name.empty()) invalid(context, "field '" + where + ".name' must not be empty");
    if (var.storage.size == 0) invalid(context, "field '" + where + ".storage.size' must be > 0");
    if (!names.insert(var.decomp_name).second) {
      invalid(context, "field '" + where + ".name': duplicate variable '" + var.decomp_name + "'");
    }
    var.decomp_type = type_from_json(
        in_context(std::string(context) + ": " + where, [&]() -> const Json& { return require(v, "type"); }),
        std::string(context) + ": " + where + ".type");
    r.variables.push_back(std::move(var));
  }

  auto tokens = j.find("tokens");
  const bool has_tokens = tokens != j.end() && !tokens->is_null();
  if (r.status != DecompileStatus::kOk) {
    if (has_tokens && !tokens->empty()) {
      invalid(context, "field 'tokens' must be empty when status is '" +
                           std::string(to_string(r.status)) + "'");
    }
    return r;  // code of a failed decompilation is never tokenized
  }
  if (!has_tokens) {
    r.tokens = canonicalize_tokens(r.raw_code, r.variables);
    return r;
  }
  if (!tokens->is_array()) invalid(context, "field 'tokens' must be an array");
  for (std::size_t i = 0; i < tokens->size(); ++i) {
    const Json& t = (*tokens)[i];
    Token tok;
    if (t.is_string()) {
      tok.text = t.get<std::string>();
      if (tok.text.find('@') != std::string::npos) {
        invalid(context, "field 'tokens[" + std::to_string(i) + "]' contains the placeholder sentinel");
      }
    } else if (t.is_object() && t.contains("var") && t["var"].is_string()) {
      const auto name = t["var"].get<std::string>();
      auto idx = r.variable_index(name);
      if (!idx) {
        invalid(context, "field 'tokens[" + std::to_string(i) + "]': placeholder references unknown variable '" +
                             name + "'");
      }
      tok.text = name;
      tok.variable = idx;
    } else {
      invalid(context, "field 'tokens[" + std::to_string(i) + "]' must be a string or {\"var\": name}");
    }
    r.tokens.tokens.push_back(std::move(tok));
  }
  return r;
}

FunctionRecord parse_export_record(std::string_view line, std::string_view context) {
  return record_from_json(parse_json(line, context), context);
}

Json record_to_json(const FunctionRecord& r) {
  Json vars = Json::array();
  for (const auto& v : r.variables) {
    vars.push_back({{"name", v.decomp_name},
                    {"storage",
                     {{"kind", std::string(to_string(v.storage.kind))},
                      {"value", v.storage.value},
                      {"size", v.storage.size}}},
                    {"type", type_to_json(v.decomp_type)}});
  }
  Json tokens = Json::array();
  for (const auto& t : r.tokens.tokens) {
    if (t.is_placeholder()) {
      tokens.push_back({{"var", r.variables.at(*t.variable).decomp_name}});
    } else {
      tokens.push_back(t.text);
    }
  }
  return Json{{"schema", kInterchangeSchema},
              {"binary", r.binary_id},
              {"function", r.function},
              {"entry", format_entry(r.entry)},
              {"view", std::string(to_string(r.view))},
              {"status", std::string(to_string(r.status))},
              {"code", r.raw_code},
              {"variables", std::move(vars)},
              {"tokens", std::move(tokens)}};
}

std::string serialize_record(const FunctionRecord& r) { return dump_line(record_to_json(r)); }

}  // namespace retype
