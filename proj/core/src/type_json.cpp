#include "retype/type_json.hpp"

#include <string>

#include "retype/error.hpp"

namespace retype {
namespace {

Json fields_to_json(std::span<const Field> fields) {
  Json arr = Json::array();
  for (const Field& f : fields) {
    arr.push_back({{"name", f.name},
                   {"offset", f.offset},
                   {"size", f.size},
                   {"type", type_to_json(f.type)}});
  }
  return arr;
}

std::string child(std::string_view where, std::string_view key) {
  return std::string(where) + "." + std::string(key);
}

// Wraps a field-access failure so the message names the full path.
template <typename Fn>
auto at_path(std::string_view where, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::kValidation) throw;
    throw Error(ErrorKind::kValidation, std::string(where) + ": " + e.what());
  }
}

std::vector<Field> fields_from_json(const Json& arr, std::string_view where) {
  if (!arr.is_array()) {
    throw Error(ErrorKind::kValidation, std::string(where) + " must be an array");
  }
  std::vector<Field> out;
  out.reserve(arr.size());
  for (std::size_t i = 0; i < arr.size(); ++i) {
    const std::string here = std::string(where) + "[" + std::to_string(i) + "]";
    const Json& f = arr[i];
    Field field;
    at_path(here, [&] {
      field.name = require_string(f, "name");
      field.offset = require_uint(f, "offset");
      field.size = require_uint(f, "size");
      return 0;
    });
    field.type = type_from_json(at_path(here, [&]() -> const Json& { return require(f, "type"); }),
                                child(here, "type"));
    out.push_back(std::move(field));
  }
  return out;
}

}  // namespace

Json type_to_json(const TypeDescriptor& t) {
  Json j;
  j["kind"] = std::string(to_string(t.kind()));
  switch (t.kind()) {
    case TypeKind::kPrimitive:
      j["name"] = t.name();
      j["size"] = t.declared_size();
      break;
    case TypeKind::kPointer:
      j["target"] = type_to_json(t.inner());
      break;
    case TypeKind::kArray:
      j["element"] = type_to_json(t.inner());
      j["count"] = t.count();
      break;
    case TypeKind::kStruct:
      j["tag"] = t.name();
      j["size"] = t.declared_size();
      j["fields"] = fields_to_json(t.fields());
      break;
    case TypeKind::kUnion:
      j["tag"] = t.name();
      j["size"] = t.declared_size();
      j["members"] = fields_to_json(t.fields());
      break;
    case TypeKind::kEnum:
      j["tag"] = t.name();
      j["size"] = t.declared_size();
      break;
    case TypeKind::kFunction: {
      j["return"] = type_to_json(t.inner());
      Json params = Json::array();
      for (const auto& p : t.params()) params.push_back(type_to_json(p));
      j["params"] = std::move(params);
      break;
    }
    case TypeKind::kVoid:
    case TypeKind::kDisappear:
      break;
  }
  if (t.typedef_name()) j["typedef"] = *t.typedef_name();
  return j;
}

TypeDescriptor type_from_json(const Json& j, std::string_view where) {
  if (!j.is_object()) {
    throw Error(ErrorKind::kValidation, std::string(where) + " must be an object");
  }
  const std::string kind = at_path(where, [&] { return require_string(j, "kind"); });
  TypeDescriptor t;
  if (kind == "primitive") {
    at_path(where, [&] {
      t = TypeDescriptor::primitive(require_string(j, "name"), require_uint(j, "size"));
      return 0;
    });
  } else if (kind == "pointer") {
    t = TypeDescriptor::pointer(type_from_json(
        at_path(where, [&]() -> const Json& { return require(j, "target"); }),
        child(where, "target")));
  } else if (kind == "array") {
    const auto count = at_path(where, [&] { return require_uint(j, "count"); });
    t = TypeDescriptor::array(
        type_from_json(at_path(where, [&]() -> const Json& { return require(j, "element"); }),
                       child(where, "element")),
        count);
  } else if (kind == "struct" || kind == "union") {
    const bool is_struct = kind == "struct";
    const char* list = is_struct ? "fields" : "members";
    std::string tag;
    std::uint64_t size = 0;
    at_path(where, [&] {
      tag = require_string(j, "tag");
      size = require_uint(j, "size");
      return 0;
    });
    auto fields = fields_from_json(
        at_path(where, [&]() -> const Json& { return require(j, list); }),
        child(where, list));
    t = is_struct ? TypeDescriptor::structure(std::move(tag), std::move(fields), size)
                  : TypeDescriptor::union_of(std::move(tag), std::move(fields), size);
    at_path(where, [&] {
      validate_type(t);
      return 0;
    });
  } else if (kind == "enum") {
    at_path(where, [&] {
      t = TypeDescriptor::enumeration(require_string(j, "tag"), require_uint(j, "size"));
      return 0;
    });
  } else if (kind == "function") {
    auto ret = type_from_json(
        at_path(where, [&]() -> const Json& { return require(j, "return"); }),
        child(where, "return"));
    const Json& ps = at_path(where, [&]() -> const Json& { return require(j, "params"); });
    if (!ps.is_array()) {
      throw Error(ErrorKind::kValidation, child(where, "params") + " must be an array");
    }
    std::vector<TypeDescriptor> params;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      params.push_back(
          type_from_json(ps[i], child(where, "params") + "[" + std::to_string(i) + "]"));
    }
    t = TypeDescriptor::function(std::move(ret), std::move(params));
  } else if (kind == "void") {
    t = TypeDescriptor::void_type();
  } else if (kind == "disappear") {
    t = TypeDescriptor::disappear();
  } else {
    throw Error(ErrorKind::kValidation,
                child(where, "kind") + ": unknown type variant '" + kind + "'");
  }
  if (auto it = j.find("typedef"); it != j.end()) {
    if (!it->is_string()) {
      throw Error(ErrorKind::kValidation, child(where, "typedef") + " must be a string");
    }
    t = t.with_typedef_name(it->get<std::string>());
  }
  return t;
}

}  // namespace retype
