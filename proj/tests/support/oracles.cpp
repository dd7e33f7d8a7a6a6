#include "oracles.hpp"

#include <array>
#include <cstdio>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>

namespace oracle {

namespace {

std::string tag_text(const OType& t) { return t.name.empty() ? "<anon>" : t.name; }

void render_to(const OType& t, std::string& out) {
  switch (t.kind) {
    case OType::kPrim: out += t.name; break;
    case OType::kVoid: out += "void"; break;
    case OType::kDisappear: out += "<disappear>"; break;
    case OType::kEnum: out += "enum " + tag_text(t); break;
    case OType::kStruct:
    case OType::kUnion: {
      out += t.kind == OType::kStruct ? "struct " : "union ";
      out += tag_text(t) + " {";
      for (const auto& f : t.fields) {
        out += " ";
        render_to(f.type, out);
        out += " " + f.name + "@" + std::to_string(f.offset) + ";";
      }
      out += " }";
      break;
    }
    case OType::kPtr: {
      const OType& p = t.kids[0];
      if ((p.kind == OType::kStruct || p.kind == OType::kUnion) && !p.name.empty()) {
        out += (p.kind == OType::kStruct ? "struct " : "union ") + p.name;
      } else {
        render_to(p, out);
      }
      out += " *";
      break;
    }
    case OType::kArr: {
      // Dimensions outermost first after the innermost element.
      std::string dims;
      const OType* cur = &t;
      while (cur->kind == OType::kArr) {
        dims += "[" + std::to_string(cur->count) + "]";
        cur = &cur->kids[0];
      }
      render_to(*cur, out);
      out += dims;
      break;
    }
    case OType::kFunc: {
      render_to(t.kids[0], out);
      out += " (";
      for (std::size_t i = 1; i < t.kids.size(); ++i) {
        if (i > 1) out += ", ";
        render_to(t.kids[i], out);
      }
      out += ")";
      break;
    }
  }
}

const std::array<std::pair<const char*, std::uint64_t>, 10> kPrims = {{
    {"int", 4}, {"char", 1}, {"long", 8}, {"unsigned int", 4}, {"short", 2},
    {"double", 8}, {"float", 4}, {"undefined4", 4}, {"undefined8", 8}, {"ulong", 8},
}};
const std::array<const char*, 5> kTags = {"point", "node", "S", "T", ""};
const std::array<const char*, 6> kFieldNames = {"x", "y", "next", "len", "data", "a"};

std::uint64_t below(std::mt19937_64& rng, std::uint64_t n) { return rng() % n; }

OType prim(std::mt19937_64& rng) {
  const auto& p = kPrims[below(rng, kPrims.size())];
  OType t;
  t.kind = OType::kPrim;
  t.name = p.first;
  t.size = p.second;
  return t;
}

OType aggregate(std::mt19937_64& rng, int depth, bool is_union) {
  OType t;
  t.kind = is_union ? OType::kUnion : OType::kStruct;
  t.name = kTags[below(rng, kTags.size())];
  const std::size_t n = 1 + below(rng, 3);
  std::uint64_t off = 0, size = 0;
  std::set<std::string> used;
  for (std::size_t i = 0; i < n; ++i) {
    OField f;
    f.name = kFieldNames[below(rng, kFieldNames.size())];
    if (!used.insert(f.name).second) f.name += std::to_string(i);
    f.type = depth > 0 && below(rng, 3) == 0 ? random_type(rng, depth - 1) : prim(rng);
    if (f.type.kind == OType::kFunc || f.type.kind == OType::kVoid ||
        f.type.kind == OType::kDisappear || size_of(f.type) == 0) {
      f.type = prim(rng);
    }
    const std::uint64_t fs = size_of(f.type);
    f.offset = is_union ? 0 : off;
    off += fs;
    size = is_union ? std::max(size, fs) : off;
    t.fields.push_back(std::move(f));
  }
  t.size = size;
  return t;
}

}  // namespace

std::string render(const OType& t) {
  std::string s;
  render_to(t, s);
  return s;
}

std::uint64_t size_of(const OType& t) {
  switch (t.kind) {
    case OType::kPrim:
    case OType::kEnum:
    case OType::kStruct:
    case OType::kUnion: return t.size;
    case OType::kPtr: return 8;
    case OType::kArr: return t.count * size_of(t.kids[0]);
    default: return 0;
  }
}

retype::TypeDescriptor to_descriptor(const OType& t) {
  using retype::TypeDescriptor;
  switch (t.kind) {
    case OType::kPrim: return TypeDescriptor::primitive(t.name, t.size);
    case OType::kVoid: return TypeDescriptor::void_type();
    case OType::kDisappear: return TypeDescriptor::disappear();
    case OType::kEnum: return TypeDescriptor::enumeration(t.name, t.size);
    case OType::kPtr: return TypeDescriptor::pointer(to_descriptor(t.kids[0]));
    case OType::kArr: return TypeDescriptor::array(to_descriptor(t.kids[0]), t.count);
    case OType::kStruct:
    case OType::kUnion: {
      std::vector<retype::Field> fields;
      for (const auto& f : t.fields) {
        fields.push_back({f.name, to_descriptor(f.type), f.offset, size_of(f.type)});
      }
      return t.kind == OType::kStruct ? TypeDescriptor::structure(t.name, std::move(fields), t.size)
                                      : TypeDescriptor::union_of(t.name, std::move(fields), t.size);
    }
    case OType::kFunc: {
      std::vector<TypeDescriptor> params;
      for (std::size_t i = 1; i < t.kids.size(); ++i) params.push_back(to_descriptor(t.kids[i]));
      return TypeDescriptor::function(to_descriptor(t.kids[0]), std::move(params));
    }
  }
  return TypeDescriptor::void_type();
}

OType random_type(std::mt19937_64& rng, int depth) {
  const std::uint64_t pick = below(rng, depth > 0 ? 10 : 4);
  OType t;
  switch (pick) {
    case 0:
    case 1: return prim(rng);
    case 2:
      t.kind = below(rng, 2) ? OType::kDisappear : OType::kVoid;
      return t;
    case 3:
      t.kind = OType::kEnum;
      t.name = kTags[below(rng, kTags.size())];
      t.size = 4;
      return t;
    case 4:
    case 5:
      t.kind = OType::kPtr;
      t.kids.push_back(random_type(rng, depth - 1));
      return t;
    case 6:
      t.kind = OType::kArr;
      t.count = 1 + below(rng, 8);
      t.kids.push_back(random_type(rng, depth - 1));
      if (size_of(t.kids[0]) == 0) t.kids[0] = prim(rng);
      return t;
    case 7: return aggregate(rng, depth - 1, false);
    case 8: return aggregate(rng, depth - 1, true);
    default: {
      t.kind = OType::kFunc;
      t.kids.push_back(random_type(rng, depth - 1));
      const std::size_t n = below(rng, 3);
      for (std::size_t i = 0; i < n; ++i) t.kids.push_back(random_type(rng, depth - 1));
      return t;
    }
  }
}

OType near_copy(const OType& t, std::mt19937_64& rng) {
  OType c = t;
  switch (below(rng, 4)) {
    case 0: return c;  // identical
    case 1:
      // Rename a primitive or tag somewhere on the spine.
      {
        OType* cur = &c;
        while (!cur->kids.empty() && below(rng, 2)) cur = &cur->kids[0];
        if (cur->kind == OType::kPrim) cur->name = cur->name == "int" ? "uint" : "int";
        else if (!cur->name.empty()) cur->name += "_";
        else if (cur->kind == OType::kArr) cur->count += 1;
        return c;
      }
    case 2:
      // Shift a field offset (layout differs, names agree).
      if ((c.kind == OType::kStruct || c.kind == OType::kUnion) && !c.fields.empty()) {
        c.fields.back().offset += 4;
        c.size += 4;
      } else if (c.kind == OType::kPtr) {
        OType outer;
        outer.kind = OType::kPtr;
        outer.kids.push_back(c);
        return outer;
      }
      return c;
    default:
      // Pointer to a named struct reduced to a tag reference: same spelling.
      if (c.kind == OType::kPtr && (c.kids[0].kind == OType::kStruct) && !c.kids[0].name.empty()) {
        c.kids[0].fields.clear();
      }
      return c;
  }
}

std::uint64_t fingerprint(const retype::FunctionRecord& r) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto feed = [&](const std::string& s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ULL;
    }
    h ^= 0;
    h *= 0x100000001b3ULL;
  };
  for (const auto& tok : r.tokens.tokens) {
    if (tok.variable) feed("@@var@@");
    else if (tok.text == r.function) feed("@@self@@");
    else feed(tok.text);
  }
  return h;
}

Recount recount(const std::vector<retype::LabeledExample>& examples) {
  Recount c;
  std::set<std::string> bins;
  std::set<std::uint64_t> bodies;
  for (const auto& ex : examples) {
    bins.insert(ex.input.binary_id);
    bodies.insert(fingerprint(ex.input));
    ++c.functions;
    std::uint64_t gone = 0;
    for (const auto& g : ex.gold) {
      const std::string text = retype::render_type(g.type);
      ++c.variables;
      if (text == "<disappear>") ++gone;
      if (text.rfind("struct ", 0) == 0 && text.back() == '}') ++c.structs;
    }
    c.disappear += gone;
    if (!ex.gold.empty() && gone == ex.gold.size()) ++c.all_disappear;
    if (gone == 0) ++c.no_disappear;
    if (ex.in_train.value_or(false)) ++c.in_train;
  }
  c.binaries = bins.size();
  c.unique_functions = bodies.size();
  return c;
}

std::set<std::pair<std::string, std::string>> readelf_variables(const std::filesystem::path& readelf,
                                                                const std::filesystem::path& binary) {
  const std::string cmd = "'" + readelf.string() + "' --debug-dump=info '" + binary.string() + "' 2>/dev/null";
  std::unique_ptr<FILE, int (*)(FILE*)> pipe(popen(cmd.c_str(), "r"), pclose);
  if (!pipe) throw std::runtime_error("cannot run " + cmd);
  std::string text;
  std::array<char, 65536> buf;
  while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe.get())) text.append(buf.data(), n);

  struct Die {
    int depth = 0;
    std::string tag;
    std::string name;
    bool low_pc = false;
    bool declaration = false;
  };
  std::vector<Die> dies;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    // " <1><2d>: Abbrev Number: 5 (DW_TAG_subprogram)"
    const auto lt = line.find_first_not_of(' ');
    if (lt != std::string::npos && line[lt] == '<' && line.find("Abbrev Number") != std::string::npos) {
      Die d;
      d.depth = std::stoi(line.substr(lt + 1));
      const auto open = line.find("(DW_TAG_");
      if (open == std::string::npos) continue;  // null entry
      d.tag = line.substr(open + 1, line.find(')', open) - open - 1);
      dies.push_back(d);
      continue;
    }
    if (dies.empty()) continue;
    if (line.find("DW_AT_name") != std::string::npos) {
      const auto colon = line.rfind(": ");
      std::string v = line.substr(colon + 2);
      while (!v.empty() && (v.back() == ' ' || v.back() == '\t')) v.pop_back();
      dies.back().name = v;
    } else if (line.find("DW_AT_low_pc") != std::string::npos) {
      dies.back().low_pc = true;
    } else if (line.find("DW_AT_declaration") != std::string::npos) {
      dies.back().declaration = true;
    }
  }

  std::set<std::pair<std::string, std::string>> out;
  // Stack of enclosing DIEs: (depth, index).  Variables belong to the nearest
  // enclosing defined subprogram unless an inlined subroutine intervenes.
  std::vector<std::size_t> stack;
  for (std::size_t i = 0; i < dies.size(); ++i) {
    const Die& d = dies[i];
    while (!stack.empty() && dies[stack.back()].depth >= d.depth) stack.pop_back();
    if (d.tag == "DW_TAG_formal_parameter" || d.tag == "DW_TAG_variable") {
      for (auto it = stack.rbegin(); it != stack.rend(); ++it) {
        const Die& s = dies[*it];
        if (s.tag == "DW_TAG_inlined_subroutine") break;
        if (s.tag == "DW_TAG_subprogram") {
          if (s.low_pc && !s.declaration && !d.name.empty() && !s.name.empty()) {
            out.insert({s.name, d.name});
          }
          break;
        }
      }
    }
    stack.push_back(i);
  }
  return out;
}

std::string percent(std::uint64_t num, std::uint64_t den, int decimals) {
  if (den == 0) return "—";
  std::uint64_t scale = 100;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  const std::uint64_t q = (2 * num * scale + den) / (2 * den);
  std::uint64_t unit = 1;
  for (int i = 0; i < decimals; ++i) unit *= 10;
  std::string s = std::to_string(q / unit);
  if (decimals > 0) {
    std::string frac = std::to_string(q % unit);
    s += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  return s;
}

}  // namespace oracle
