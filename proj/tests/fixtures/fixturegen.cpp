// Deterministic fixture generator.
//
//   fixturegen sources OUT_DIR            C sources for the fixture binaries
//   fixturegen exports BIN_DIR OUT_DIR    simulated decompiler exports
//
// Both modes rebuild the same plan from fixed seeds, so the exports describe
// exactly the variables the sources declare.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "retype/dwarf_index.hpp"
#include "retype/elf_file.hpp"
#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/ingest.hpp"
#include "retype/typelib.hpp"

namespace fs = std::filesystem;
using retype::TypeDescriptor;

namespace {

constexpr int kBinaries = 20;
constexpr std::uint64_t kHelperSeed = 77;
const std::set<int> kHelperBinaries = {2, 5, 9, 14};
constexpr int kTimeoutBinary = 3;
constexpr int kStrippedFailBinary = 11;
constexpr int kDebugFailBinary = 16;

enum class Cat { kInt, kChar, kReal, kCharPtr, kIntPtr, kPoint, kBuffer, kNode, kPointPtr, kNodePtr, kBufferPtr };

struct CType {
  const char* c;
  Cat cat;
  std::uint64_t size;
  const char* stripped;  // decompiler spelling without debug info
  bool param_ok;
  int weight;
};

const std::vector<CType> kTypes = {
    {"int", Cat::kInt, 4, "int", true, 10},
    {"unsigned int", Cat::kInt, 4, "uint", true, 4},
    {"u32", Cat::kInt, 4, "uint", true, 2},
    {"char", Cat::kChar, 1, "char", true, 3},
    {"unsigned char", Cat::kChar, 1, "byte", true, 2},
    {"short", Cat::kInt, 2, "short", true, 2},
    {"long", Cat::kInt, 8, "long", true, 5},
    {"unsigned long", Cat::kInt, 8, "ulong", true, 3},
    {"double", Cat::kReal, 8, "double", true, 2},
    {"float", Cat::kReal, 4, "float", true, 2},
    {"char *", Cat::kCharPtr, 8, "char *", true, 5},
    {"int *", Cat::kIntPtr, 8, "int *", true, 3},
    {"struct point", Cat::kPoint, 8, "", false, 3},
    {"struct buffer", Cat::kBuffer, 24, "", false, 2},
    {"struct node", Cat::kNode, 16, "", false, 2},
    {"struct point *", Cat::kPointPtr, 8, "undefined8", true, 3},
    {"struct node *", Cat::kNodePtr, 8, "undefined8", true, 3},
    {"struct buffer *", Cat::kBufferPtr, 8, "undefined8", true, 2},
};

const std::map<Cat, std::vector<std::string>> kNames = {
    {Cat::kInt, {"count", "total", "idx", "len", "flags", "mode", "value", "acc", "n", "limit"}},
    {Cat::kChar, {"c", "ch", "tag", "sep", "kind"}},
    {Cat::kReal, {"ratio", "scale", "weight", "avg"}},
    {Cat::kCharPtr, {"name", "str", "path", "msg", "text"}},
    {Cat::kIntPtr, {"out", "slot", "arr", "res"}},
    {Cat::kPoint, {"pt", "origin", "pos"}},
    {Cat::kBuffer, {"buf", "scratch"}},
    {Cat::kNode, {"head", "tmp_node"}},
    {Cat::kPointPtr, {"p", "corner"}},
    {Cat::kNodePtr, {"cur", "list", "it"}},
    {Cat::kBufferPtr, {"dst", "src_buf"}},
};

struct Rng {
  std::mt19937_64 gen;
  explicit Rng(std::uint64_t seed) : gen(seed) {}
  std::uint64_t below(std::uint64_t n) { return gen() % n; }
  bool chance(int percent) { return below(100) < static_cast<std::uint64_t>(percent); }
};

struct Var {
  std::string c_name;
  int type = 0;
  bool param = false;
  int ordinal = 0;        // 1-based position among parameters
  int param_no = 0;       // integer register slot
  int float_param_no = 0; // vector register slot
  int unique_no = 0;      // when aliased
  bool aliased = false;    // shown by the decompiler as a temporary
  std::string temp_name;   // when aliased
  std::int64_t stack_off = 0;
  TypeDescriptor stripped_type;
};

struct Temp {
  std::string name;
  TypeDescriptor type;
  bool stripped_only = false;
  int unique_no = 0;
};

// One statement with variable placeholders (see ph()).  `c` is the source
// form, `dbg`/`str` the decompiled forms; an empty form is omitted.
struct Stmt {
  std::string c, dbg, str;
};

struct Func {
  std::string name;
  std::vector<Var> vars;
  std::vector<Temp> temps;
  std::vector<Stmt> body;
  int ret = 0;
};

struct Binary {
  int index = 0;
  std::vector<Func> funcs;
  bool helper = false;
};

std::string hex_no_prefix(std::uint64_t v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
  return buf;
}

TypeDescriptor prim(const char* name, std::uint64_t size) { return TypeDescriptor::primitive(name, size); }

TypeDescriptor undefined_of(std::uint64_t size) {
  return prim(("undefined" + std::to_string(size)).c_str(), size);
}

TypeDescriptor stripped_type_for(const CType& t, Rng& rng) {
  switch (t.cat) {
    case Cat::kPoint:
    case Cat::kBuffer:
    case Cat::kNode:
      return TypeDescriptor::array(prim("undefined1", 1), t.size);
    case Cat::kCharPtr:
      return rng.chance(50) ? TypeDescriptor::pointer(prim("char", 1)) : undefined_of(8);
    case Cat::kIntPtr:
      return rng.chance(50) ? TypeDescriptor::pointer(prim("int", 4)) : undefined_of(8);
    case Cat::kPointPtr:
    case Cat::kNodePtr:
    case Cat::kBufferPtr:
      return undefined_of(8);
    default:
      return rng.chance(30) ? undefined_of(t.size) : prim(t.stripped, t.size);
  }
}

std::string temp_prefix(const TypeDescriptor& t) {
  if (t.is(retype::TypeKind::kPointer)) return t.inner().name() == "char" ? "pcVar" : "piVar";
  const std::string& n = t.name();
  if (n == "int") return "iVar";
  if (n == "char") return "cVar";
  if (n == "byte") return "bVar";
  if (n == "short") return "sVar";
  if (n == "long") return "lVar";
  if (n == "double") return "dVar";
  if (n == "float") return "fVar";
  return "uVar";
}

int pick_type(Rng& rng, bool param) {
  int total = 0;
  for (const auto& t : kTypes)
    if (!param || t.param_ok) total += t.weight;
  int r = static_cast<int>(rng.below(static_cast<std::uint64_t>(total)));
  for (std::size_t i = 0; i < kTypes.size(); ++i) {
    if (param && !kTypes[i].param_ok) continue;
    if (r < kTypes[i].weight) return static_cast<int>(i);
    r -= kTypes[i].weight;
  }
  return 0;
}

std::string K(Rng& rng) { return std::to_string(1 + rng.below(99)); }

Stmt same(std::string s) { return Stmt{s, s, s}; }

// Usage statements for the variable spelled `v`.
std::vector<Stmt> uses_of(Cat cat, const std::string& v, Rng& rng) {
  std::vector<Stmt> out;
  const std::string k = K(rng);
  switch (cat) {
    case Cat::kInt:
      switch (rng.below(4)) {
        case 0: out.push_back(same(v + " = " + v + " + " + k + ";")); break;
        case 1: out.push_back(same("if (" + v + " > " + k + ") {\n    " + v + " = " + v + " - " + k + ";\n  }")); break;
        case 2: out.push_back(same(v + " = " + v + " * " + k + ";")); break;
        default: out.push_back(same(v + " = " + v + " ^ " + k + ";")); break;
      }
      break;
    case Cat::kChar:
      if (rng.chance(50)) out.push_back(same(v + " = " + v + " + " + k + ";"));
      else out.push_back(same("if (" + v + " == " + k + ") {\n    " + v + " = 0;\n  }"));
      break;
    case Cat::kReal:
      out.push_back(same(v + " = " + v + (rng.chance(50) ? " * " : " + ") + k + ".5;"));
      break;
    case Cat::kCharPtr:
      if (rng.chance(50)) out.push_back(same("if (" + v + " != 0) {\n    " + v + " = " + v + " + 1;\n  }"));
      else out.push_back(same(v + " = " + v + " + " + k + ";"));
      break;
    case Cat::kIntPtr:
      if (rng.chance(50)) out.push_back(same("if (" + v + " != 0) {\n    *" + v + " = " + k + ";\n  }"));
      else out.push_back(same(v + " = " + v + " + 1;"));
      break;
    case Cat::kPoint:
      out.push_back({v + ".x = " + k + ";", v + ".x = " + k + ";", v + "._0_4_ = " + k + ";"});
      if (rng.chance(60)) {
        const std::string k2 = K(rng);
        out.push_back({v + ".y = " + v + ".x + " + k2 + ";", v + ".y = " + v + ".x + " + k2 + ";",
                       v + "._4_4_ = " + v + "._0_4_ + " + k2 + ";"});
      }
      break;
    case Cat::kBuffer:
      out.push_back({v + ".len = " + k + ";", v + ".len = " + k + ";", v + "._8_8_ = " + k + ";"});
      out.push_back({v + ".data = 0;", v + ".data = 0;", v + "._0_8_ = 0;"});
      if (rng.chance(50)) out.push_back({v + ".cap = " + k + ";", v + ".cap = " + k + ";", v + "._16_4_ = " + k + ";"});
      break;
    case Cat::kNode:
      out.push_back({v + ".value = " + k + ";", v + ".value = " + k + ";", v + "._0_4_ = " + k + ";"});
      out.push_back({v + ".next = 0;", v + ".next = 0;", v + "._8_8_ = 0;"});
      break;
    case Cat::kPointPtr:
      out.push_back({"if (" + v + " != 0) {\n    " + v + "->x = " + k + ";\n  }",
                     "if (" + v + " != 0) {\n    " + v + "->x = " + k + ";\n  }",
                     "if (" + v + " != 0) {\n    *(int *)" + v + " = " + k + ";\n  }"});
      break;
    case Cat::kNodePtr:
      if (rng.chance(50)) {
        out.push_back({"if (" + v + " != 0) {\n    " + v + " = " + v + "->next;\n  }",
                       "if (" + v + " != 0) {\n    " + v + " = " + v + "->next;\n  }",
                       "if (" + v + " != 0) {\n    " + v + " = *(undefined8 *)(" + v + " + 8);\n  }"});
      } else {
        out.push_back({"if (" + v + " != 0) {\n    " + v + "->value = " + v + "->value + " + k + ";\n  }",
                       "if (" + v + " != 0) {\n    " + v + "->value = " + v + "->value + " + k + ";\n  }",
                       "if (" + v + " != 0) {\n    *(int *)" + v + " = *(int *)" + v + " + " + k + ";\n  }"});
      }
      break;
    case Cat::kBufferPtr:
      out.push_back({"if (" + v + " != 0) {\n    " + v + "->len = " + k + ";\n  }",
                     "if (" + v + " != 0) {\n    " + v + "->len = " + k + ";\n  }",
                     "if (" + v + " != 0) {\n    *(ulong *)(" + v + " + 8) = " + k + ";\n  }"});
      break;
  }
  return out;
}

bool is_scalar(Cat c) {
  return c == Cat::kInt || c == Cat::kChar || c == Cat::kReal || c == Cat::kCharPtr || c == Cat::kIntPtr;
}

std::string init_value(Cat c, Rng& rng) {
  if (c == Cat::kReal) return K(rng) + ".25";
  if (c == Cat::kCharPtr || c == Cat::kIntPtr || c == Cat::kPointPtr || c == Cat::kNodePtr ||
      c == Cat::kBufferPtr)
    return "0";
  return K(rng);
}

// Placeholders in templates are "\x01N\x02" for variable N; render() swaps in
// the name each form uses.
std::string ph(std::size_t i) { return "\x01" + std::to_string(i) + "\x02"; }

Func make_func(std::string name, Rng& rng) {
  Func f;
  f.name = std::move(name);
  const int nparams = static_cast<int>(rng.below(4));
  const int nlocals = 1 + static_cast<int>(rng.below(5));
  std::set<std::string> used;
  int gp = 0, fp = 0;
  std::int64_t frame = 8;
  int temp_no = 0;
  for (int i = 0; i < nparams + nlocals; ++i) {
    Var v;
    v.param = i < nparams;
    v.type = pick_type(rng, v.param);
    const CType& ct = kTypes[static_cast<std::size_t>(v.type)];
    const auto& pool = kNames.at(ct.cat);
    std::string n = pool[rng.below(pool.size())];
    for (int k = 2; used.count(n); ++k) n = pool[rng.below(pool.size())] + std::to_string(k);
    used.insert(n);
    v.c_name = n;
    v.stripped_type = stripped_type_for(ct, rng);
    if (v.param) {
      v.ordinal = i + 1;
      if (ct.cat == Cat::kReal) v.float_param_no = ++fp;
      else v.param_no = ++gp;
    } else {
      frame += static_cast<std::int64_t>((ct.size + 7) / 8 * 8);
      v.stack_off = -frame;
      v.aliased = is_scalar(ct.cat) && rng.chance(30);
      if (v.aliased) {
        v.unique_no = ++temp_no;
        v.temp_name = temp_prefix(v.stripped_type) + std::to_string(v.unique_no);
      }
    }
    f.vars.push_back(std::move(v));
  }

  std::vector<Stmt> inits, uses;
  for (std::size_t i = 0; i < f.vars.size(); ++i) {
    const Cat cat = kTypes[static_cast<std::size_t>(f.vars[i].type)].cat;
    if (!f.vars[i].param && cat != Cat::kPoint && cat != Cat::kBuffer && cat != Cat::kNode) {
      inits.push_back(same(ph(i) + " = " + init_value(cat, rng) + ";"));
    }
    for (auto& s : uses_of(cat, ph(i), rng)) uses.push_back(std::move(s));
  }
  const int shared = static_cast<int>(rng.below(3));
  for (int t = 0; t < shared; ++t) {
    Temp tmp;
    tmp.type = undefined_of(rng.chance(50) ? 4 : 8);
    tmp.name = "uVar" + std::to_string(++temp_no);
    tmp.unique_no = temp_no;
    const std::string k = K(rng);
    Stmt s{"", tmp.name + " = " + k + ";\n  if (" + tmp.name + " != 0) {\n    " + tmp.name + " = " + tmp.name + " - 1;\n  }", ""};
    s.str = s.dbg;
    uses.push_back(s);
    f.temps.push_back(std::move(tmp));
  }
  if (rng.chance(35)) {
    Temp tmp;
    tmp.type = prim("int", 4);
    tmp.name = "iVar" + std::to_string(++temp_no);
    tmp.unique_no = temp_no;
    tmp.stripped_only = true;
    Stmt s{"", "", tmp.name + " = " + K(rng) + ";\n  if (" + tmp.name + " < 0) {\n    return " + tmp.name + ";\n  }"};
    uses.push_back(s);
    f.temps.push_back(std::move(tmp));
  }
  std::shuffle(uses.begin(), uses.end(), rng.gen);
  f.body = std::move(inits);
  for (auto& s : uses) f.body.push_back(std::move(s));
  f.ret = static_cast<int>(rng.below(100));
  return f;
}

Binary make_binary(int index) {
  Rng rng(1000 + static_cast<std::uint64_t>(index));
  Binary b;
  b.index = index;
  b.helper = kHelperBinaries.count(index) > 0;
  const int n = 4 + static_cast<int>(rng.below(5));
  for (int i = 0; i < n; ++i) {
    char name[32];
    std::snprintf(name, sizeof name, "fn_%02d_%d", index, i);
    b.funcs.push_back(make_func(name, rng));
  }
  return b;
}

Func make_helper() {
  Rng rng(kHelperSeed);
  for (;;) {
    Func f = make_func("helper_mix", rng);
    // The in-train checks need a helper with at least one parameter and one
    // surviving local.
    bool has_param = false, has_local = false;
    for (const auto& v : f.vars) {
      has_param |= v.param;
      has_local |= !v.param && !v.aliased;
    }
    if (has_param && has_local) return f;
  }
}

std::string bin_name(int index) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "bin%02d", index);
  return buf;
}

// ---- C sources --------------------------------------------------------------

const char* kPrelude =
    "typedef unsigned int u32;\n"
    "struct point { int x; int y; };\n"
    "struct buffer { char *data; unsigned long len; int cap; };\n"
    "struct node { int value; struct node *next; };\n\n";

std::string c_decl(const CType& t, const std::string& name) {
  std::string c = t.c;
  if (c.back() == '*') return c + name;
  return c + " " + name;
}

std::string substitute(std::string text, const std::vector<std::string>& names) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '\x01') {
      std::size_t end = text.find('\x02', i);
      out += names[std::stoul(text.substr(i + 1, end - i - 1))];
      i = end;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::string c_signature(const Func& f) {
  std::string s = "int " + f.name + "(";
  bool first = true;
  for (const auto& v : f.vars) {
    if (!v.param) continue;
    if (!first) s += ", ";
    s += c_decl(kTypes[static_cast<std::size_t>(v.type)], v.c_name);
    first = false;
  }
  return s + (first ? "void)" : ")");
}

std::string c_function(const Func& f) {
  std::vector<std::string> names;
  for (const auto& v : f.vars) names.push_back(v.c_name);
  std::string s = c_signature(f) + "\n{\n";
  for (const auto& v : f.vars) {
    if (v.param) continue;
    s += "  " + c_decl(kTypes[static_cast<std::size_t>(v.type)], v.c_name) + ";\n";
  }
  for (const auto& st : f.body) {
    if (st.c.empty()) continue;
    s += "  " + substitute(st.c, names) + "\n";
  }
  s += "  return " + std::to_string(f.ret) + ";\n}\n\n";
  return s;
}

std::string c_call(const Func& f) {
  std::string s = f.name + "(";
  bool first = true;
  for (const auto& v : f.vars) {
    if (!v.param) continue;
    if (!first) s += ", ";
    s += "0";
    first = false;
  }
  return s + ")";
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + p.string());
}

void emit_sources(const fs::path& out) {
  fs::create_directories(out);
  const Func helper = make_helper();
  write_text(out / "helper.c", std::string(kPrelude) + c_function(helper));
  for (int i = 0; i < kBinaries; ++i) {
    const Binary b = make_binary(i);
    std::string s = kPrelude;
    if (b.helper) s += c_signature(helper) + ";\n\n";
    for (const auto& f : b.funcs) s += c_function(f);
    s += "int main(void)\n{\n  int r = 0;\n";
    for (const auto& f : b.funcs) s += "  r += " + c_call(f) + ";\n";
    if (b.helper) s += "  r += " + c_call(helper) + ";\n";
    s += "  return r;\n}\n";
    write_text(out / (bin_name(i) + ".c"), s);
  }
}

// ---- exports ------------------------------------------------------------------

constexpr std::int64_t kGpRegs[] = {0x38, 0x30, 0x10, 0x8, 0x80, 0x88};

std::string decomp_decl(const TypeDescriptor& t, const std::string& name) {
  if (t.is(retype::TypeKind::kArray)) {
    return retype::render_type(t.inner()) + " " + name + " [" + std::to_string(t.count()) + "]";
  }
  std::string r = retype::render_type(t);
  if (r.back() == '*') return r + name;
  return r + " " + name;
}

std::string fun_name(std::uint64_t entry) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "FUN_%08llx", static_cast<unsigned long long>(entry));
  return buf;
}

struct ViewVar {
  std::string name;
  retype::StorageLocation storage;
  TypeDescriptor type;
};

retype::FunctionRecord render_view(const Func& f, retype::View view, const std::string& binary_id,
                                   std::uint64_t entry, const retype::DwarfIndex& index) {
  const bool stripped = view == retype::View::kStripped;
  retype::FunctionRecord r;
  r.binary_id = binary_id;
  r.entry = entry;
  r.view = view;
  r.function = stripped ? fun_name(entry) : f.name;

  std::vector<std::string> names;
  std::vector<ViewVar> params, locals;
  for (const auto& v : f.vars) {
    const CType& ct = kTypes[static_cast<std::size_t>(v.type)];
    ViewVar vv;
    if (v.aliased) {
      vv.name = v.temp_name;
      vv.type = v.stripped_type;
      vv.storage = {retype::StorageKind::kUnique, 0x100 * v.unique_no, ct.size};
    } else if (stripped) {
      vv.type = v.stripped_type;
      if (v.param) {
        vv.name = "param_" + std::to_string(v.ordinal);
      } else {
        vv.name = "local_" + hex_no_prefix(static_cast<std::uint64_t>(-v.stack_off));
      }
    } else {
      vv.name = v.c_name;
      auto t = retype::lookup(index, f.name, v.c_name, entry);
      if (!t) throw std::runtime_error("no DWARF type for " + f.name + "::" + v.c_name);
      vv.type = *t;
    }
    if (!v.aliased) {
      if (v.param) {
        vv.storage = v.float_param_no > 0
                         ? retype::StorageLocation{retype::StorageKind::kRegister, 0x1200 + 0x40 * (v.float_param_no - 1), ct.size}
                         : retype::StorageLocation{retype::StorageKind::kRegister, kGpRegs[v.param_no - 1], ct.size};
      } else {
        vv.storage = {retype::StorageKind::kStack, v.stack_off, ct.size};
      }
    }
    names.push_back(vv.name);
    (v.param ? params : locals).push_back(vv);
  }

  std::string code = "int " + r.function + "(";
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (i) code += ",";
    code += decomp_decl(params[i].type, params[i].name);
  }
  code += params.empty() ? "void)\n\n{\n" : ")\n\n{\n";
  std::vector<ViewVar> temps;
  for (const auto& t : f.temps) {
    if (t.stripped_only && !stripped) continue;
    temps.push_back({t.name, {retype::StorageKind::kUnique, 0x100 * t.unique_no, retype::size_of(t.type)}, t.type});
  }
  for (const auto& l : locals) code += "  " + decomp_decl(l.type, l.name) + ";\n";
  for (const auto& t : temps) code += "  " + decomp_decl(t.type, t.name) + ";\n";
  code += "  \n";
  for (const auto& st : f.body) {
    const std::string& text = stripped ? st.str : st.dbg;
    if (text.empty()) continue;
    code += "  " + substitute(text, names) + "\n";
  }
  code += "  return " + std::to_string(f.ret) + ";\n}\n";
  r.raw_code = code;

  for (auto* group : {&params, &locals, &temps}) {
    for (auto& vv : *group) r.variables.push_back({vv.name, vv.storage, vv.type});
  }
  r.tokens = retype::canonicalize_tokens(r.raw_code, r.variables);
  return r;
}

retype::FunctionRecord empty_record(const std::string& binary_id, const std::string& name, std::uint64_t entry,
                                    retype::View view, retype::DecompileStatus status, std::string code) {
  retype::FunctionRecord r;
  r.binary_id = binary_id;
  r.function = name;
  r.entry = entry;
  r.view = view;
  r.status = status;
  r.raw_code = std::move(code);
  r.tokens = retype::canonicalize_tokens(r.raw_code, r.variables);
  return r;
}

void emit_exports(const fs::path& bin_dir, const fs::path& out) {
  fs::create_directories(out);
  const Func helper = make_helper();
  for (int i = 0; i < kBinaries; ++i) {
    const Binary b = make_binary(i);
    const fs::path path = bin_dir / bin_name(i);
    const auto elf = retype::ElfFile::open(path);
    const std::string id = retype::sha256_file(path);
    const auto index = retype::index_elf(elf, id);
    std::map<std::string, std::uint64_t> entries;
    for (const auto& s : elf.symbols()) {
      if (s.type == retype::kSttFunc && s.value != 0) entries[s.name] = s.value;
    }
    auto entry_of = [&](const std::string& name) {
      auto it = entries.find(name);
      if (it == entries.end()) throw std::runtime_error(path.string() + ": no symbol " + name);
      return it->second;
    };

    std::vector<const Func*> funcs;
    for (const auto& f : b.funcs) funcs.push_back(&f);
    if (b.helper) funcs.push_back(&helper);

    for (auto view : {retype::View::kDebug, retype::View::kStripped}) {
      const bool stripped = view == retype::View::kStripped;
      std::string text;
      for (std::size_t k = 0; k < funcs.size(); ++k) {
        const Func& f = *funcs[k];
        const std::uint64_t entry = entry_of(f.name);
        retype::FunctionRecord r;
        const bool last_own = k + 1 == b.funcs.size();
        if (i == kTimeoutBinary && last_own) {
          r = empty_record(id, stripped ? fun_name(entry) : f.name, entry, view,
                           retype::DecompileStatus::kTimeout, "");
        } else if ((i == kStrippedFailBinary && stripped && k == 0) ||
                   (i == kDebugFailBinary && !stripped && k == 0)) {
          r = empty_record(id, stripped ? fun_name(entry) : f.name, entry, view,
                           retype::DecompileStatus::kFailed, "");
        } else {
          r = render_view(f, view, id, entry, index);
        }
        text += retype::serialize_record(r) + "\n";
      }
      const std::uint64_t main_entry = entry_of("main");
      std::string main_name = stripped ? fun_name(main_entry) : std::string("main");
      std::string main_code = "int " + main_name + "(void)\n\n{\n";
      for (const auto* f : funcs) {
        main_code += "  " + (stripped ? fun_name(entry_of(f->name)) : f->name) + "();\n";
      }
      main_code += "  return 0;\n}\n";
      text += retype::serialize_record(empty_record(id, main_name, main_entry, view,
                                                    retype::DecompileStatus::kOk, main_code)) + "\n";
      if (entries.count("_init")) {
        text += retype::serialize_record(empty_record(id, "_init", entries["_init"], view,
                                                      retype::DecompileStatus::kOk, "")) + "\n";
      }
      write_text(out / (bin_name(i) + (stripped ? ".stripped.jsonl" : ".debug.jsonl")), text);
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  try {
    const std::string mode = argc > 1 ? argv[1] : "";
    if (mode == "sources" && argc == 3) {
      emit_sources(argv[2]);
      return 0;
    }
    if (mode == "exports" && argc == 4) {
      emit_exports(argv[2], argv[3]);
      return 0;
    }
    std::cerr << "usage: fixturegen sources OUT | fixturegen exports BIN_DIR OUT\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "fixturegen: " << e.what() << "\n";
    return 2;
  }
}
