#include "retype/dwarf_index.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cstring>
#include <unordered_map>
#include <unordered_set>

#include "retype/elf_file.hpp"
#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/type_json.hpp"

namespace retype {

std::string_view to_string(VariableKind kind) {
  switch (kind) {
    case VariableKind::kParameter: return "parameter";
    case VariableKind::kLocal: return "local";
    case VariableKind::kGlobal: return "global";
  }
  return "?";
}

std::string FunctionKey::to_string() const {
  char buf[24];
  std::snprintf(buf, sizeof buf, "@0x%llx", static_cast<unsigned long long>(entry));
  return name + buf;
}

// ---------------------------------------------------------------------------
// DwarfIndex

DwarfIndex::DwarfIndex(std::string binary_id, std::uint64_t pointer_size,
                       std::vector<DwarfFunction> functions,
                       std::vector<DwarfVariable> globals)
    : binary_id_(std::move(binary_id)),
      pointer_size_(pointer_size),
      functions_(std::move(functions)),
      globals_(std::move(globals)) {
  for (std::size_t i = 0; i < functions_.size(); ++i) {
    by_key_.emplace(functions_[i].key, i);
    by_name_.emplace(functions_[i].key.name, i);
    for (const auto& v : functions_[i].variables) declared_names_.insert(v.name);
  }
  for (const auto& g : globals_) declared_names_.insert(g.name);
}

const DwarfFunction* DwarfIndex::find_function(std::string_view name,
                                               std::optional<std::uint64_t> entry) const {
  if (entry) {
    if (auto it = by_key_.find(FunctionKey{std::string(name), *entry}); it != by_key_.end()) {
      return &functions_[it->second];
    }
  }
  auto [lo, hi] = by_name_.equal_range(name);
  if (lo != hi && std::next(lo) == hi) return &functions_[lo->second];
  return nullptr;
}

namespace {

Json variable_to_json(const DwarfVariable& v) {
  Json j{{"name", v.name}, {"kind", std::string(to_string(v.kind))}, {"typed", v.typed}};
  j["type"] = type_to_json(v.type);
  return j;
}

VariableKind kind_from_string(const std::string& s) {
  if (s == "parameter") return VariableKind::kParameter;
  if (s == "local") return VariableKind::kLocal;
  if (s == "global") return VariableKind::kGlobal;
  throw Error(ErrorKind::kValidation, "unknown variable kind '" + s + "'");
}

DwarfVariable variable_from_json(const Json& j, std::optional<FunctionKey> fn) {
  DwarfVariable v;
  v.name = require_string(j, "name");
  v.kind = kind_from_string(require_string(j, "kind"));
  v.typed = require(j, "typed").get<bool>();
  v.type = type_from_json(require(j, "type"));
  v.function = std::move(fn);
  return v;
}

std::string entry_hex(std::uint64_t entry) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(entry));
  return buf;
}

}  // namespace

Json DwarfIndex::to_json() const {
  Json fns = Json::array();
  for (const auto& f : functions_) {
    Json vars = Json::array();
    for (const auto& v : f.variables) vars.push_back(variable_to_json(v));
    fns.push_back({{"name", f.key.name}, {"entry", entry_hex(f.key.entry)}, {"variables", vars}});
  }
  Json globals = Json::array();
  for (const auto& g : globals_) globals.push_back(variable_to_json(g));
  Json names = Json::array();
  for (const auto& n : declared_names_) names.push_back(n);
  return Json{{"schema", 1},
              {"binary_id", binary_id_},
              {"pointer_size", pointer_size_},
              {"functions", std::move(fns)},
              {"globals", std::move(globals)},
              {"declared_names", std::move(names)}};
}

DwarfIndex DwarfIndex::from_json(const Json& j) {
  if (require_uint(j, "schema") != 1) {
    throw Error(ErrorKind::kValidation, "dwarfindex: unsupported schema version");
  }
  std::vector<DwarfFunction> fns;
  for (const Json& f : require(j, "functions")) {
    DwarfFunction fn;
    fn.key.name = require_string(f, "name");
    fn.key.entry = std::stoull(require_string(f, "entry"), nullptr, 16);
    for (const Json& v : require(f, "variables")) {
      fn.variables.push_back(variable_from_json(v, fn.key));
    }
    fns.push_back(std::move(fn));
  }
  std::vector<DwarfVariable> globals;
  for (const Json& g : require(j, "globals")) globals.push_back(variable_from_json(g, std::nullopt));
  DwarfIndex idx(require_string(j, "binary_id"), require_uint(j, "pointer_size"),
                 std::move(fns), std::move(globals));
  std::set<std::string, std::less<>> stored;
  for (const Json& n : require(j, "declared_names")) stored.insert(n.get<std::string>());
  if (stored != idx.declared_names()) {
    throw Error(ErrorKind::kValidation, "dwarfindex: declared_names disagrees with variables");
  }
  return idx;
}

std::optional<TypeDescriptor> lookup(const DwarfIndex& index, std::string_view function,
                                     std::string_view name,
                                     std::optional<std::uint64_t> entry) {
  if (const DwarfFunction* fn = index.find_function(function, entry)) {
    for (const auto& v : fn->variables) {
      if (v.name == name) return v.type;
    }
  }
  for (const auto& g : index.globals()) {
    if (g.name == name) return g.type;
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// DWARF reader

namespace {

namespace dw {
// Tags
constexpr std::uint64_t kTagArrayType = 0x01;
constexpr std::uint64_t kTagClassType = 0x02;
constexpr std::uint64_t kTagEnumerationType = 0x04;
constexpr std::uint64_t kTagFormalParameter = 0x05;
constexpr std::uint64_t kTagLexicalBlock = 0x0b;
constexpr std::uint64_t kTagMember = 0x0d;
constexpr std::uint64_t kTagPointerType = 0x0f;
constexpr std::uint64_t kTagReferenceType = 0x10;
constexpr std::uint64_t kTagCompileUnit = 0x11;
constexpr std::uint64_t kTagStructureType = 0x13;
constexpr std::uint64_t kTagSubroutineType = 0x15;
constexpr std::uint64_t kTagTypedef = 0x16;
constexpr std::uint64_t kTagUnionType = 0x17;
constexpr std::uint64_t kTagInlinedSubroutine = 0x1d;
constexpr std::uint64_t kTagSubrangeType = 0x21;
constexpr std::uint64_t kTagBaseType = 0x24;
constexpr std::uint64_t kTagConstType = 0x26;
constexpr std::uint64_t kTagSubprogram = 0x2e;
constexpr std::uint64_t kTagVariable = 0x34;
constexpr std::uint64_t kTagVolatileType = 0x35;
constexpr std::uint64_t kTagRestrictType = 0x37;
constexpr std::uint64_t kTagUnspecifiedType = 0x3b;
constexpr std::uint64_t kTagPartialUnit = 0x3c;
constexpr std::uint64_t kTagRvalueReferenceType = 0x42;
constexpr std::uint64_t kTagAtomicType = 0x47;

// Attributes
constexpr std::uint64_t kAtName = 0x03;
constexpr std::uint64_t kAtByteSize = 0x0b;
constexpr std::uint64_t kAtBitSize = 0x0d;
constexpr std::uint64_t kAtLowPc = 0x11;
constexpr std::uint64_t kAtLowerBound = 0x22;
constexpr std::uint64_t kAtUpperBound = 0x2f;
constexpr std::uint64_t kAtAbstractOrigin = 0x31;
constexpr std::uint64_t kAtCount = 0x37;
constexpr std::uint64_t kAtDataMemberLocation = 0x38;
constexpr std::uint64_t kAtDeclaration = 0x3c;
constexpr std::uint64_t kAtSpecification = 0x47;
constexpr std::uint64_t kAtType = 0x49;
constexpr std::uint64_t kAtDataBitOffset = 0x6b;
constexpr std::uint64_t kAtLinkageName = 0x6e;
constexpr std::uint64_t kAtStrOffsetsBase = 0x72;
constexpr std::uint64_t kAtAddrBase = 0x73;
constexpr std::uint64_t kAtMipsLinkageName = 0x2007;

// Forms
constexpr std::uint64_t kFormAddr = 0x01;
constexpr std::uint64_t kFormBlock2 = 0x03;
constexpr std::uint64_t kFormBlock4 = 0x04;
constexpr std::uint64_t kFormData2 = 0x05;
constexpr std::uint64_t kFormData4 = 0x06;
constexpr std::uint64_t kFormData8 = 0x07;
constexpr std::uint64_t kFormString = 0x08;
constexpr std::uint64_t kFormBlock = 0x09;
constexpr std::uint64_t kFormBlock1 = 0x0a;
constexpr std::uint64_t kFormData1 = 0x0b;
constexpr std::uint64_t kFormFlag = 0x0c;
constexpr std::uint64_t kFormSdata = 0x0d;
constexpr std::uint64_t kFormStrp = 0x0e;
constexpr std::uint64_t kFormUdata = 0x0f;
constexpr std::uint64_t kFormRefAddr = 0x10;
constexpr std::uint64_t kFormRef1 = 0x11;
constexpr std::uint64_t kFormRef2 = 0x12;
constexpr std::uint64_t kFormRef4 = 0x13;
constexpr std::uint64_t kFormRef8 = 0x14;
constexpr std::uint64_t kFormRefUdata = 0x15;
constexpr std::uint64_t kFormIndirect = 0x16;
constexpr std::uint64_t kFormSecOffset = 0x17;
constexpr std::uint64_t kFormExprloc = 0x18;
constexpr std::uint64_t kFormFlagPresent = 0x19;
constexpr std::uint64_t kFormStrx = 0x1a;
constexpr std::uint64_t kFormAddrx = 0x1b;
constexpr std::uint64_t kFormRefSup4 = 0x1c;
constexpr std::uint64_t kFormStrpSup = 0x1d;
constexpr std::uint64_t kFormData16 = 0x1e;
constexpr std::uint64_t kFormLineStrp = 0x1f;
constexpr std::uint64_t kFormRefSig8 = 0x20;
constexpr std::uint64_t kFormImplicitConst = 0x21;
constexpr std::uint64_t kFormLoclistx = 0x22;
constexpr std::uint64_t kFormRnglistx = 0x23;
constexpr std::uint64_t kFormRefSup8 = 0x24;
constexpr std::uint64_t kFormStrx1 = 0x25;
constexpr std::uint64_t kFormStrx2 = 0x26;
constexpr std::uint64_t kFormStrx3 = 0x27;
constexpr std::uint64_t kFormStrx4 = 0x28;
constexpr std::uint64_t kFormAddrx1 = 0x29;
constexpr std::uint64_t kFormAddrx2 = 0x2a;
constexpr std::uint64_t kFormAddrx3 = 0x2b;
constexpr std::uint64_t kFormAddrx4 = 0x2c;
constexpr std::uint64_t kFormGnuAddrIndex = 0x1f01;
constexpr std::uint64_t kFormGnuStrIndex = 0x1f02;
constexpr std::uint64_t kFormGnuRefAlt = 0x1f20;
constexpr std::uint64_t kFormGnuStrpAlt = 0x1f21;

constexpr std::uint8_t kOpPlusUconst = 0x23;
constexpr std::uint8_t kOpConstu = 0x10;

constexpr std::uint8_t kUtCompile = 0x01;
constexpr std::uint8_t kUtType = 0x02;
constexpr std::uint8_t kUtPartial = 0x03;
constexpr std::uint8_t kUtSkeleton = 0x04;
constexpr std::uint8_t kUtSplitCompile = 0x05;
constexpr std::uint8_t kUtSplitType = 0x06;
}  // namespace dw

[[noreturn]] void malformed(std::uint64_t offset, const std::string& what) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "0x%llx", static_cast<unsigned long long>(offset));
  throw Error(ErrorKind::kMalformedDwarf,
              "malformed DWARF at .debug_info offset " + std::string(buf) + ": " + what);
}

class Cursor {
 public:
  Cursor(std::span<const std::byte> data, std::uint64_t pos, const char* section)
      : data_(data), pos_(pos), section_(section) {}

  std::uint64_t pos() const noexcept { return pos_; }
  void seek(std::uint64_t p) { pos_ = p; }
  bool at_end() const noexcept { return pos_ >= data_.size(); }

  void need(std::uint64_t n) const {
    if (pos_ > data_.size() || data_.size() - pos_ < n) {
      throw Error(ErrorKind::kMalformedDwarf, std::string("truncated ") + section_ +
                                                  " at offset " + std::to_string(pos_));
    }
  }

  std::uint64_t fixed(unsigned n) {
    need(n);
    std::uint64_t v = 0;
    for (unsigned i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(std::to_integer<std::uint8_t>(data_[pos_ + i])) << (8 * i);
    }
    pos_ += n;
    return v;
  }
  std::uint8_t u8() { return static_cast<std::uint8_t>(fixed(1)); }
  std::uint16_t u16() { return static_cast<std::uint16_t>(fixed(2)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(fixed(4)); }
  std::uint64_t u64() { return fixed(8); }

  std::uint64_t uleb() {
    std::uint64_t result = 0;
    unsigned shift = 0;
    for (;;) {
      const std::uint8_t b = u8();
      if (shift < 64) result |= static_cast<std::uint64_t>(b & 0x7f) << shift;
      shift += 7;
      if (!(b & 0x80)) return result;
    }
  }

  std::int64_t sleb() {
    std::int64_t result = 0;
    unsigned shift = 0;
    std::uint8_t b = 0;
    do {
      b = u8();
      if (shift < 64) result |= static_cast<std::int64_t>(b & 0x7f) << shift;
      shift += 7;
    } while (b & 0x80);
    if (shift < 64 && (b & 0x40)) result |= -(static_cast<std::int64_t>(1) << shift);
    return result;
  }

  std::string_view cstr() {
    need(1);
    const char* begin = reinterpret_cast<const char*>(data_.data()) + pos_;
    const std::size_t len = strnlen(begin, data_.size() - pos_);
    if (pos_ + len >= data_.size()) {
      throw Error(ErrorKind::kMalformedDwarf,
                  std::string("unterminated string in ") + section_);
    }
    pos_ += len + 1;
    return {begin, len};
  }

  std::span<const std::byte> bytes(std::uint64_t n) {
    need(n);
    auto s = data_.subspan(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::span<const std::byte> data_;
  std::uint64_t pos_;
  const char* section_;
};

struct AbbrevAttr {
  std::uint64_t name;
  std::uint64_t form;
  std::int64_t implicit_const;
};

struct Abbrev {
  std::uint64_t tag = 0;
  bool has_children = false;
  std::vector<AbbrevAttr> attrs;
};

using AbbrevTable = std::unordered_map<std::uint64_t, Abbrev>;

AbbrevTable parse_abbrevs(std::span<const std::byte> section, std::uint64_t offset) {
  AbbrevTable table;
  Cursor c(section, offset, ".debug_abbrev");
  for (;;) {
    const std::uint64_t code = c.uleb();
    if (code == 0) break;
    Abbrev a;
    a.tag = c.uleb();
    a.has_children = c.u8() != 0;
    for (;;) {
      AbbrevAttr attr{c.uleb(), c.uleb(), 0};
      if (attr.form == dw::kFormImplicitConst) attr.implicit_const = c.sleb();
      if (attr.name == 0 && attr.form == 0) break;
      a.attrs.push_back(attr);
    }
    table.emplace(code, std::move(a));
  }
  return table;
}

enum class ValueClass : std::uint8_t {
  kUnsigned,  // data, flag, udata, address
  kSigned,    // sdata, implicit_const
  kString,    // inline or already resolved
  kStrOffset, // offset into .debug_str
  kLineStrOffset,
  kStrIndex,  // strx: index into .debug_str_offsets
  kAddrIndex,
  kRef,       // absolute .debug_info offset
  kBlock,
  kOther,
};

struct AttrValue {
  std::uint64_t name = 0;
  std::uint64_t form = 0;
  ValueClass cls = ValueClass::kOther;
  std::uint64_t u = 0;
  std::int64_t s = 0;
  std::string_view str;
  std::span<const std::byte> block;
};

struct UnitInfo {
  std::uint64_t offset = 0;
  std::uint16_t version = 0;
  std::uint8_t address_size = 8;
  std::uint8_t offset_size = 4;
  std::uint64_t str_offsets_base = 0;
  std::uint64_t addr_base = 0;
};

struct Die {
  std::uint64_t offset = 0;
  std::uint64_t tag = 0;
  std::size_t unit = 0;
  std::size_t parent = SIZE_MAX;
  std::vector<std::size_t> children;
  std::vector<AttrValue> attrs;

  const AttrValue* find(std::uint64_t at) const {
    for (const auto& a : attrs) {
      if (a.name == at) return &a;
    }
    return nullptr;
  }
};

struct Sections {
  std::span<const std::byte> info, abbrev, str, line_str, str_offsets, addr;
};

class DwarfReader {
 public:
  DwarfReader(Sections s, std::uint64_t pointer_size, DwarfIndex* warnings_sink)
      : sec_(s), pointer_size_(pointer_size), sink_(warnings_sink) {}

  void read_all_units() {
    Cursor c(sec_.info, 0, ".debug_info");
    while (!c.at_end()) {
      const std::uint64_t unit_offset = c.pos();
      UnitInfo u;
      u.offset = unit_offset;
      std::uint64_t length = c.u32();
      if (length == 0xffffffffULL) {
        length = c.u64();
        u.offset_size = 8;
      } else if (length >= 0xfffffff0ULL) {
        malformed(unit_offset, "reserved unit length");
      }
      const std::uint64_t body = c.pos();
      const std::uint64_t unit_end = body + length;
      if (unit_end > sec_.info.size()) malformed(unit_offset, "unit extends past section end");
      u.version = c.u16();
      if (u.version != 4 && u.version != 5) {
        throw Error(ErrorKind::kUnsupported,
                    "DWARF version " + std::to_string(u.version) +
                        " is not supported (only 4 and 5) at .debug_info offset " +
                        std::to_string(unit_offset));
      }
      std::uint64_t abbrev_offset = 0;
      std::uint8_t unit_type = dw::kUtCompile;
      if (u.version == 5) {
        unit_type = c.u8();
        u.address_size = c.u8();
        abbrev_offset = c.fixed(u.offset_size);
        if (unit_type == dw::kUtSkeleton || unit_type == dw::kUtSplitCompile) {
          c.u64();  // dwo_id
        } else if (unit_type == dw::kUtType || unit_type == dw::kUtSplitType) {
          c.u64();                    // type signature
          c.fixed(u.offset_size);     // type offset
        } else if (unit_type != dw::kUtCompile && unit_type != dw::kUtPartial) {
          malformed(unit_offset, "unknown unit type " + std::to_string(unit_type));
        }
      } else {
        abbrev_offset = c.fixed(u.offset_size);
        u.address_size = c.u8();
      }
      if (abbrev_offset >= sec_.abbrev.size()) malformed(unit_offset, "abbrev offset out of range");
      const std::size_t unit_index = units_.size();
      units_.push_back(u);
      auto& table = abbrev_cache_.try_emplace(abbrev_offset).first->second;
      if (table.empty()) table = parse_abbrevs(sec_.abbrev, abbrev_offset);
      read_dies(c, unit_end, unit_index, table);
      c.seek(unit_end);
    }
  }

  DwarfIndex build(std::string binary_id) {
    std::vector<DwarfFunction> functions;
    std::vector<DwarfVariable> globals;
    std::set<std::string> global_names;
    for (std::size_t i = 0; i < dies_.size(); ++i) {
      const Die& d = dies_[i];
      if (d.tag != dw::kTagCompileUnit && d.tag != dw::kTagPartialUnit) continue;
      for (std::size_t child : d.children) {
        collect_scope(child, functions, globals, global_names);
      }
    }
    std::stable_sort(functions.begin(), functions.end(),
                     [](const DwarfFunction& a, const DwarfFunction& b) { return a.key < b.key; });
    DwarfIndex index(std::move(binary_id), pointer_size_, std::move(functions), std::move(globals));
    for (auto& w : warnings_) index.add_warning(std::move(w));
    return index;
  }

 private:
  void warn(std::string msg) {
    spdlog::debug("dwarf: {}", msg);
    warnings_.push_back(std::move(msg));
  }

  void read_dies(Cursor& c, std::uint64_t unit_end, std::size_t unit_index,
                 const AbbrevTable& table) {
    std::vector<std::size_t> stack;  // open parents
    while (c.pos() < unit_end) {
      const std::uint64_t die_offset = c.pos();
      const std::uint64_t code = c.uleb();
      if (code == 0) {
        if (!stack.empty()) stack.pop_back();
        continue;
      }
      auto it = table.find(code);
      if (it == table.end()) malformed(die_offset, "unknown abbreviation code " + std::to_string(code));
      const Abbrev& ab = it->second;
      Die die;
      die.offset = die_offset;
      die.tag = ab.tag;
      die.unit = unit_index;
      die.parent = stack.empty() ? SIZE_MAX : stack.back();
      die.attrs.reserve(ab.attrs.size());
      for (const auto& spec : ab.attrs) {
        die.attrs.push_back(read_attr(c, spec, units_[unit_index], die_offset));
      }
      const std::size_t idx = dies_.size();
      if (die.parent != SIZE_MAX) dies_[die.parent].children.push_back(idx);
      by_offset_.emplace(die_offset, idx);
      if (die.tag == dw::kTagCompileUnit || die.tag == dw::kTagPartialUnit) {
        if (const auto* a = die.find(dw::kAtStrOffsetsBase)) units_[unit_index].str_offsets_base = a->u;
        if (const auto* a = die.find(dw::kAtAddrBase)) units_[unit_index].addr_base = a->u;
      }
      dies_.push_back(std::move(die));
      if (ab.has_children) stack.push_back(idx);
    }
  }

  AttrValue read_attr(Cursor& c, const AbbrevAttr& spec, const UnitInfo& u,
                      std::uint64_t die_offset) {
    AttrValue v;
    v.name = spec.name;
    v.form = spec.form;
    std::uint64_t form = spec.form;
    if (form == dw::kFormIndirect) {
      form = c.uleb();
      v.form = form;
    }
    switch (form) {
      case dw::kFormAddr:
        v.cls = ValueClass::kUnsigned;
        v.u = c.fixed(u.address_size);
        break;
      case dw::kFormData1:
      case dw::kFormRef1:
      case dw::kFormFlag:
      case dw::kFormStrx1:
      case dw::kFormAddrx1:
        v.u = c.u8();
        break;
      case dw::kFormData2:
      case dw::kFormRef2:
      case dw::kFormStrx2:
      case dw::kFormAddrx2:
        v.u = c.u16();
        break;
      case dw::kFormStrx3:
      case dw::kFormAddrx3:
        v.u = c.fixed(3);
        break;
      case dw::kFormData4:
      case dw::kFormRef4:
      case dw::kFormRefSup4:
      case dw::kFormStrx4:
      case dw::kFormAddrx4:
        v.u = c.u32();
        break;
      case dw::kFormData8:
      case dw::kFormRef8:
      case dw::kFormRefSig8:
      case dw::kFormRefSup8:
        v.u = c.u64();
        break;
      case dw::kFormData16:
        v.block = c.bytes(16);
        break;
      case dw::kFormSdata:
        v.s = c.sleb();
        v.u = static_cast<std::uint64_t>(v.s);
        break;
      case dw::kFormUdata:
      case dw::kFormRefUdata:
      case dw::kFormStrx:
      case dw::kFormAddrx:
      case dw::kFormLoclistx:
      case dw::kFormRnglistx:
      case dw::kFormGnuAddrIndex:
      case dw::kFormGnuStrIndex:
        v.u = c.uleb();
        break;
      case dw::kFormString:
        v.str = c.cstr();
        break;
      case dw::kFormStrp:
      case dw::kFormLineStrp:
      case dw::kFormRefAddr:
      case dw::kFormSecOffset:
      case dw::kFormStrpSup:
      case dw::kFormGnuRefAlt:
      case dw::kFormGnuStrpAlt:
        v.u = c.fixed(u.offset_size);
        break;
      case dw::kFormBlock1:
        v.block = c.bytes(c.u8());
        break;
      case dw::kFormBlock2:
        v.block = c.bytes(c.u16());
        break;
      case dw::kFormBlock4:
        v.block = c.bytes(c.u32());
        break;
      case dw::kFormBlock:
      case dw::kFormExprloc:
        v.block = c.bytes(c.uleb());
        break;
      case dw::kFormFlagPresent:
        v.u = 1;
        break;
      case dw::kFormImplicitConst:
        v.s = spec.implicit_const;
        v.u = static_cast<std::uint64_t>(v.s);
        break;
      default:
        malformed(die_offset, "unknown attribute form 0x" + hex64(form));
    }
    switch (form) {
      case dw::kFormSdata:
      case dw::kFormImplicitConst:
        v.cls = ValueClass::kSigned;
        break;
      case dw::kFormString:
        v.cls = ValueClass::kString;
        break;
      case dw::kFormStrp:
        v.cls = ValueClass::kStrOffset;
        break;
      case dw::kFormLineStrp:
        v.cls = ValueClass::kLineStrOffset;
        break;
      case dw::kFormStrx:
      case dw::kFormStrx1:
      case dw::kFormStrx2:
      case dw::kFormStrx3:
      case dw::kFormStrx4:
      case dw::kFormGnuStrIndex:
        v.cls = ValueClass::kStrIndex;
        break;
      case dw::kFormAddrx:
      case dw::kFormAddrx1:
      case dw::kFormAddrx2:
      case dw::kFormAddrx3:
      case dw::kFormAddrx4:
      case dw::kFormGnuAddrIndex:
        v.cls = ValueClass::kAddrIndex;
        break;
      case dw::kFormRef1:
      case dw::kFormRef2:
      case dw::kFormRef4:
      case dw::kFormRef8:
      case dw::kFormRefUdata:
        v.cls = ValueClass::kRef;
        v.u += u.offset;  // unit-relative
        break;
      case dw::kFormRefAddr:
        v.cls = ValueClass::kRef;
        break;
      case dw::kFormBlock1:
      case dw::kFormBlock2:
      case dw::kFormBlock4:
      case dw::kFormBlock:
      case dw::kFormExprloc:
        v.cls = ValueClass::kBlock;
        break;
      case dw::kFormAddr:
      case dw::kFormData1:
      case dw::kFormData2:
      case dw::kFormData4:
      case dw::kFormData8:
      case dw::kFormUdata:
      case dw::kFormFlag:
      case dw::kFormFlagPresent:
      case dw::kFormSecOffset:
        v.cls = ValueClass::kUnsigned;
        break;
      default:
        v.cls = ValueClass::kOther;
    }
    return v;
  }

  std::optional<std::string_view> string_value(const Die& d, const AttrValue& a) const {
    const UnitInfo& u = units_[d.unit];
    auto from = [&](std::span<const std::byte> sec, std::uint64_t off,
                    const char* name) -> std::string_view {
      if (off >= sec.size()) malformed(d.offset, std::string("string offset outside ") + name);
      Cursor c(sec, off, name);
      return c.cstr();
    };
    switch (a.cls) {
      case ValueClass::kString:
        return a.str;
      case ValueClass::kStrOffset:
        return from(sec_.str, a.u, ".debug_str");
      case ValueClass::kLineStrOffset:
        return from(sec_.line_str, a.u, ".debug_line_str");
      case ValueClass::kStrIndex: {
        // DWARF 5 str_offsets_base defaults to just past the table header.
        std::uint64_t base = u.str_offsets_base ? u.str_offsets_base : 8;
        Cursor c(sec_.str_offsets, base + a.u * u.offset_size, ".debug_str_offsets");
        return from(sec_.str, c.fixed(u.offset_size), ".debug_str");
      }
      default:
        return std::nullopt;
    }
  }

  std::optional<std::uint64_t> address_value(const Die& d, const AttrValue& a) const {
    if (a.cls == ValueClass::kUnsigned) return a.u;
    if (a.cls == ValueClass::kAddrIndex) {
      const UnitInfo& u = units_[d.unit];
      const std::uint64_t base = u.addr_base ? u.addr_base : 8;
      Cursor c(sec_.addr, base + a.u * u.address_size, ".debug_addr");
      return c.fixed(u.address_size);
    }
    return std::nullopt;
  }

  std::optional<std::string> name_of(std::size_t idx) const {
    const Die& d = dies_[idx];
    if (const auto* a = d.find(dw::kAtName)) {
      if (auto s = string_value(d, *a)) return std::string(*s);
    }
    for (std::uint64_t link : {dw::kAtAbstractOrigin, dw::kAtSpecification}) {
      if (auto origin = ref(d, link)) return name_of(*origin);
    }
    return std::nullopt;
  }

  std::optional<std::string> linkage_name_of(std::size_t idx) const {
    const Die& d = dies_[idx];
    for (std::uint64_t at : {dw::kAtLinkageName, dw::kAtMipsLinkageName}) {
      if (const auto* a = d.find(at)) {
        if (auto s = string_value(d, *a)) return std::string(*s);
      }
    }
    for (std::uint64_t link : {dw::kAtAbstractOrigin, dw::kAtSpecification}) {
      if (auto origin = ref(d, link)) return linkage_name_of(*origin);
    }
    return std::nullopt;
  }

  std::optional<std::size_t> ref(const Die& d, std::uint64_t at) const {
    const auto* a = d.find(at);
    if (!a || a->cls != ValueClass::kRef) return std::nullopt;
    auto it = by_offset_.find(a->u);
    if (it == by_offset_.end()) malformed(d.offset, "reference to unknown DIE 0x" + hex64(a->u));
    return it->second;
  }

  // Type reference of a DIE, following abstract origins.
  std::optional<std::size_t> type_ref(std::size_t idx) const {
    const Die& d = dies_[idx];
    if (auto t = ref(d, dw::kAtType)) return t;
    if (d.find(dw::kAtType)) return std::nullopt;  // e.g. ref_sig8
    for (std::uint64_t link : {dw::kAtAbstractOrigin, dw::kAtSpecification}) {
      if (auto origin = ref(d, link)) return type_ref(*origin);
    }
    return std::nullopt;
  }

  std::uint64_t unsigned_attr(const Die& d, std::uint64_t at, std::uint64_t fallback = 0) const {
    const auto* a = d.find(at);
    if (!a) return fallback;
    if (a->cls == ValueClass::kUnsigned || a->cls == ValueClass::kSigned) return a->u;
    return fallback;
  }

  // ---- type resolution ----------------------------------------------------

  TypeDescriptor resolve_type_of(std::size_t idx, bool* typed) {
    auto t = type_ref(idx);
    if (!t) {
      if (dies_[idx].find(dw::kAtType)) {
        if (typed) *typed = false;
        warn("unresolvable type reference at DIE 0x" + hex64(dies_[idx].offset));
      }
      return TypeDescriptor::void_type();
    }
    return resolve(*t);
  }

  TypeDescriptor resolve(std::size_t idx) {
    if (auto it = memo_.find(idx); it != memo_.end()) return it->second;
    if (!in_progress_.insert(idx).second) {
      warn("cyclic type graph at DIE 0x" + hex64(dies_[idx].offset));
      return TypeDescriptor::void_type();
    }
    TypeDescriptor t = resolve_uncached(idx);
    in_progress_.erase(idx);
    memo_.emplace(idx, t);
    return t;
  }

  TypeDescriptor resolve_pointer_target(std::size_t idx) {
    // Strip qualifiers/typedefs to see whether the target is a named aggregate;
    // if so build a tag reference instead of recursing into its fields.
    std::size_t cur = idx;
    std::optional<std::string> via_typedef;
    for (int guard = 0; guard < 64; ++guard) {
      const Die& d = dies_[cur];
      if (d.tag == dw::kTagTypedef && !via_typedef) via_typedef = name_of(cur);
      if (d.tag == dw::kTagTypedef || d.tag == dw::kTagConstType ||
          d.tag == dw::kTagVolatileType || d.tag == dw::kTagRestrictType ||
          d.tag == dw::kTagAtomicType) {
        auto next = type_ref(cur);
        if (!next) return resolve(idx);
        cur = *next;
        continue;
      }
      break;
    }
    const Die& d = dies_[cur];
    const bool aggregate = d.tag == dw::kTagStructureType || d.tag == dw::kTagClassType ||
                           d.tag == dw::kTagUnionType;
    if (aggregate) {
      if (auto tag = name_of(cur)) {
        const std::uint64_t size = unsigned_attr(d, dw::kAtByteSize);
        TypeDescriptor r = d.tag == dw::kTagUnionType ? TypeDescriptor::union_of(*tag, {}, size)
                                                      : TypeDescriptor::structure(*tag, {}, size);
        if (via_typedef) r = r.with_typedef_name(*via_typedef);
        return r;
      }
    }
    return resolve(idx);
  }

  std::vector<Field> resolve_members(std::size_t idx, bool is_struct, const std::string& where) {
    std::vector<Field> fields;
    std::optional<std::uint64_t> prev;
    for (std::size_t child : dies_[idx].children) {
      const Die& m = dies_[child];
      if (m.tag != dw::kTagMember) continue;
      Field f;
      f.name = name_of(child).value_or("");
      f.type = resolve_type_of(child, nullptr);
      f.size = size_of(f.type, pointer_size_);
      if (const auto* loc = m.find(dw::kAtDataMemberLocation)) {
        if (loc->cls == ValueClass::kBlock) {
          Cursor c(loc->block, 0, "location expression");
          const std::uint8_t op = loc->block.empty() ? 0 : c.u8();
          if (op == dw::kOpPlusUconst || op == dw::kOpConstu) {
            f.offset = c.uleb();
          } else {
            warn("unsupported member location expression in " + where);
          }
        } else {
          f.offset = loc->u;
        }
      } else if (const auto* bits = m.find(dw::kAtDataBitOffset)) {
        f.offset = bits->u / 8;
      }
      const bool bitfield = m.find(dw::kAtBitSize) != nullptr;
      if (bitfield) {
        if (const auto* bits = m.find(dw::kAtDataBitOffset)) f.offset = bits->u / 8;
      }
      if (is_struct && prev && f.offset <= *prev) {
        warn("skipping member '" + f.name + "' of " + where + " sharing a storage unit");
        continue;
      }
      if (f.name.empty()) f.name = "<anon>";
      prev = f.offset;
      fields.push_back(std::move(f));
    }
    return fields;
  }

  TypeDescriptor resolve_uncached(std::size_t idx) {
    const Die& d = dies_[idx];
    switch (d.tag) {
      case dw::kTagBaseType:
      case dw::kTagUnspecifiedType:
        return TypeDescriptor::primitive(name_of(idx).value_or("<unnamed>"),
                                         unsigned_attr(d, dw::kAtByteSize));
      case dw::kTagPointerType:
      case dw::kTagReferenceType:
      case dw::kTagRvalueReferenceType: {
        auto target = type_ref(idx);
        return TypeDescriptor::pointer(target ? resolve_pointer_target(*target)
                                              : TypeDescriptor::void_type());
      }
      case dw::kTagConstType:
      case dw::kTagVolatileType:
      case dw::kTagRestrictType:
      case dw::kTagAtomicType:
        return resolve_type_of(idx, nullptr);
      case dw::kTagTypedef: {
        TypeDescriptor t = resolve_type_of(idx, nullptr);
        if (auto n = name_of(idx)) t = t.with_typedef_name(*n);
        return t;
      }
      case dw::kTagStructureType:
      case dw::kTagClassType:
      case dw::kTagUnionType: {
        const bool is_struct = d.tag != dw::kTagUnionType;
        std::string tag = name_of(idx).value_or("");
        const std::uint64_t size = unsigned_attr(d, dw::kAtByteSize);
        const std::string where = (is_struct ? "struct " : "union ") +
                                  (tag.empty() ? std::string(kAnonTag) : tag);
        auto fields = resolve_members(idx, is_struct, where);
        // Declarations (incomplete types) carry neither size nor members.
        std::vector<Field> kept;
        for (auto& f : fields) {
          if (f.offset + f.size > size && size != 0) {
            warn("member '" + f.name + "' of " + where + " exceeds the aggregate size");
            continue;
          }
          if (size == 0) continue;
          kept.push_back(std::move(f));
        }
        return is_struct ? TypeDescriptor::structure(std::move(tag), std::move(kept), size)
                         : TypeDescriptor::union_of(std::move(tag), std::move(kept), size);
      }
      case dw::kTagEnumerationType:
        return TypeDescriptor::enumeration(name_of(idx).value_or(""),
                                           unsigned_attr(d, dw::kAtByteSize, 4));
      case dw::kTagArrayType: {
        TypeDescriptor element = resolve_type_of(idx, nullptr);
        std::vector<std::uint64_t> dims;
        for (std::size_t child : d.children) {
          const Die& s = dies_[child];
          if (s.tag != dw::kTagSubrangeType) continue;
          std::uint64_t count = 0;
          if (const auto* c = s.find(dw::kAtCount)) {
            count = c->u;
          } else if (const auto* ub = s.find(dw::kAtUpperBound)) {
            const std::uint64_t lower = unsigned_attr(s, dw::kAtLowerBound, 0);
            const bool all_ones =
                ub->cls == ValueClass::kSigned
                    ? ub->s < 0
                    : (ub->form == dw::kFormData1 && ub->u == 0xff) ||
                          (ub->form == dw::kFormData2 && ub->u == 0xffff) ||
                          (ub->form == dw::kFormData4 && ub->u == 0xffffffffULL) ||
                          ub->u == ~std::uint64_t{0};
            if (ub->cls == ValueClass::kSigned || ub->cls == ValueClass::kUnsigned) {
              count = all_ones ? 0 : ub->u - lower + 1;
            }
          }
          dims.push_back(count);
        }
        if (dims.empty()) dims.push_back(0);
        for (auto it = dims.rbegin(); it != dims.rend(); ++it) {
          element = TypeDescriptor::array(std::move(element), *it);
        }
        return element;
      }
      case dw::kTagSubroutineType: {
        TypeDescriptor ret = resolve_type_of(idx, nullptr);
        std::vector<TypeDescriptor> params;
        for (std::size_t child : d.children) {
          if (dies_[child].tag == dw::kTagFormalParameter) {
            params.push_back(resolve_type_of(child, nullptr));
          }
        }
        return TypeDescriptor::function(std::move(ret), std::move(params));
      }
      default:
        warn("unsupported type tag 0x" + hex64(d.tag) + " at DIE 0x" + hex64(d.offset));
        return TypeDescriptor::void_type();
    }
  }

  // ---- scope walk ---------------------------------------------------------

  struct Pending {
    std::size_t depth;
    std::size_t order;
    DwarfVariable var;
  };

  void collect_function_vars(std::size_t idx, std::size_t depth, const FunctionKey& key,
                             std::vector<Pending>& out,
                             std::vector<DwarfFunction>& functions,
                             std::vector<DwarfVariable>& globals,
                             std::set<std::string>& global_names) {
    for (std::size_t child : dies_[idx].children) {
      const Die& d = dies_[child];
      if (d.tag == dw::kTagFormalParameter || d.tag == dw::kTagVariable) {
        auto name = name_of(child);
        if (!name || name->empty()) continue;
        DwarfVariable v;
        v.name = *name;
        v.kind = d.tag == dw::kTagFormalParameter ? VariableKind::kParameter : VariableKind::kLocal;
        v.function = key;
        v.type = resolve_type_of(child, &v.typed);
        if (!type_ref(child)) {
          v.typed = false;
          warn("variable '" + v.name + "' in " + key.to_string() + " has no type");
        }
        out.push_back({depth, out.size(), std::move(v)});
      } else if (d.tag == dw::kTagLexicalBlock) {
        collect_function_vars(child, depth + 1, key, out, functions, globals, global_names);
      } else if (d.tag == dw::kTagSubprogram) {
        // Nested function (GNU C): its own scope.
        collect_scope(child, functions, globals, global_names);
      }
      // Inlined subroutines hold the callee's variables, not ours.
    }
  }

  void collect_scope(std::size_t idx, std::vector<DwarfFunction>& functions,
                     std::vector<DwarfVariable>& globals, std::set<std::string>& global_names) {
    const Die& d = dies_[idx];
    if (d.tag == dw::kTagVariable) {
      auto name = name_of(idx);
      if (!name || name->empty()) return;
      if (!global_names.insert(*name).second) return;
      DwarfVariable v;
      v.name = *name;
      v.kind = VariableKind::kGlobal;
      v.type = resolve_type_of(idx, &v.typed);
      if (!type_ref(idx)) v.typed = false;
      globals.push_back(std::move(v));
      return;
    }
    if (d.tag != dw::kTagSubprogram) return;
    const auto* low = d.find(dw::kAtLowPc);
    if (!low || d.find(dw::kAtDeclaration)) return;  // prototype or abstract instance
    auto entry = address_value(d, *low);
    if (!entry) return;
    FunctionKey key;
    key.name = linkage_name_of(idx).value_or(name_of(idx).value_or(""));
    key.entry = *entry;
    if (key.name.empty()) return;

    std::vector<Pending> pending;
    collect_function_vars(idx, 0, key, pending, functions, globals, global_names);
    std::stable_sort(pending.begin(), pending.end(), [](const Pending& a, const Pending& b) {
      return a.depth != b.depth ? a.depth < b.depth : a.order < b.order;
    });
    DwarfFunction fn;
    fn.key = key;
    std::unordered_set<std::string> seen;
    for (auto& p : pending) {
      if (!seen.insert(p.var.name).second) {
        warn("shadowed variable '" + p.var.name + "' in " + key.to_string() +
             "; keeping the outermost declaration");
        continue;
      }
      fn.variables.push_back(std::move(p.var));
    }
    functions.push_back(std::move(fn));
  }

  Sections sec_;
  std::uint64_t pointer_size_;
  DwarfIndex* sink_;
  std::vector<UnitInfo> units_;
  std::vector<Die> dies_;
  std::unordered_map<std::uint64_t, std::size_t> by_offset_;
  std::unordered_map<std::uint64_t, AbbrevTable> abbrev_cache_;
  std::unordered_map<std::size_t, TypeDescriptor> memo_;
  std::unordered_set<std::size_t> in_progress_;
  std::vector<std::string> warnings_;
};

}  // namespace

DwarfIndex index_elf(const ElfFile& elf, std::string binary_id, std::uint64_t pointer_size) {
  auto info = elf.section_data(".debug_info");
  auto abbrev = elf.section_data(".debug_abbrev");
  if (!info || !abbrev || info->empty()) {
    throw Error(ErrorKind::kNoDebugInfo, elf.display_name() + ": no DWARF debug sections");
  }
  Sections s;
  s.info = *info;
  s.abbrev = *abbrev;
  s.str = elf.section_data(".debug_str").value_or(std::span<const std::byte>{});
  s.line_str = elf.section_data(".debug_line_str").value_or(std::span<const std::byte>{});
  s.str_offsets = elf.section_data(".debug_str_offsets").value_or(std::span<const std::byte>{});
  s.addr = elf.section_data(".debug_addr").value_or(std::span<const std::byte>{});
  DwarfReader reader(s, pointer_size, nullptr);
  reader.read_all_units();
  return reader.build(std::move(binary_id));
}

DwarfIndex index_binary(const std::filesystem::path& path, std::uint64_t pointer_size) {
  ElfFile elf = ElfFile::open(path);
  return index_elf(elf, sha256_hex(elf.bytes()), pointer_size);
}

DwarfIndex index_binary_cached(const std::filesystem::path& path,
                               const std::optional<std::filesystem::path>& cache_dir,
                               std::uint64_t pointer_size) {
  if (!cache_dir) return index_binary(path, pointer_size);
  const std::string id = sha256_file(path);
  const auto cached = *cache_dir / (id + ".dwarfindex");
  if (std::filesystem::exists(cached)) {
    DwarfIndex idx = DwarfIndex::from_json(parse_json(read_file(cached), cached.string()));
    if (idx.binary_id() == id && idx.pointer_size() == pointer_size) return idx;
  }
  DwarfIndex idx = index_binary(path, pointer_size);
  write_file(cached, dump_line(idx.to_json()) + "\n");
  return idx;
}

}  // namespace retype
