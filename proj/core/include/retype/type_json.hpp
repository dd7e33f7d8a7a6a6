#pragma once

#include <string_view>

#include "retype/json_io.hpp"
#include "retype/typelib.hpp"

namespace retype {

/// Interchange `type` object, tagged by `kind`:
///   {"kind":"primitive","name":"int","size":4}
///   {"kind":"pointer","target":T}
///   {"kind":"array","element":T,"count":N}
///   {"kind":"struct","tag":"S","size":N,"fields":[{"name","offset","size","type"}]}
///   {"kind":"union","tag":"U","size":N,"members":[...]}
///   {"kind":"enum","tag":"E","size":N}
///   {"kind":"function","return":T,"params":[T...]}
///   {"kind":"void"} {"kind":"disappear"}
/// Any object may carry an optional "typedef" string.
Json type_to_json(const TypeDescriptor& t);

/// Throws Error(kValidation) with a JSON-pointer-like path (`where`) on schema
/// violations, including unknown `kind` values.
TypeDescriptor type_from_json(const Json& j, std::string_view where = "type");

}  // namespace retype
