#include "retype/typelib.hpp"

#include <cctype>
#include <charconv>
#include <string>
#include <unordered_map>
#include <utility>

#include "retype/error.hpp"

namespace retype {

struct TypeDescriptor::Node {
  TypeKind kind = TypeKind::kVoid;
  std::string name;  // primitive name / aggregate or enum tag
  std::uint64_t size = 0;
  std::uint64_t count = 0;
  std::vector<TypeDescriptor> inner;  // [target] / [element] / [return]
  std::vector<Field> fields;
  std::vector<TypeDescriptor> params;
  std::optional<std::string> typedef_name;
};

TypeDescriptor::TypeDescriptor() : TypeDescriptor(void_type()) {}

TypeDescriptor::TypeDescriptor(std::shared_ptr<const Node> node)
    : node_(std::move(node)) {}

TypeDescriptor TypeDescriptor::primitive(std::string name, std::uint64_t size) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kPrimitive;
  n->name = std::move(name);
  n->size = size;
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::pointer(TypeDescriptor target) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kPointer;
  n->inner.push_back(std::move(target));
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::array(TypeDescriptor element, std::uint64_t count) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kArray;
  n->inner.push_back(std::move(element));
  n->count = count;
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::structure(std::string tag, std::vector<Field> fields,
                                         std::uint64_t size) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kStruct;
  n->name = std::move(tag);
  n->fields = std::move(fields);
  n->size = size;
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::union_of(std::string tag, std::vector<Field> members,
                                        std::uint64_t size) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kUnion;
  n->name = std::move(tag);
  n->fields = std::move(members);
  n->size = size;
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::enumeration(std::string tag, std::uint64_t size) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kEnum;
  n->name = std::move(tag);
  n->size = size;
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::function(TypeDescriptor return_type,
                                        std::vector<TypeDescriptor> params) {
  auto n = std::make_shared<Node>();
  n->kind = TypeKind::kFunction;
  n->inner.push_back(std::move(return_type));
  n->params = std::move(params);
  return TypeDescriptor(std::move(n));
}

TypeDescriptor TypeDescriptor::void_type() {
  static const std::shared_ptr<const Node> node = std::make_shared<Node>();
  return TypeDescriptor(node);
}

TypeDescriptor TypeDescriptor::disappear() {
  static const auto node = [] {
    auto n = std::make_shared<Node>();
    n->kind = TypeKind::kDisappear;
    return std::shared_ptr<const Node>(std::move(n));
  }();
  return TypeDescriptor(node);
}

TypeDescriptor TypeDescriptor::unknown() {
  return primitive(std::string(kUnknownText), 0);
}

TypeKind TypeDescriptor::kind() const noexcept { return node_->kind; }
const std::string& TypeDescriptor::name() const noexcept { return node_->name; }
std::uint64_t TypeDescriptor::declared_size() const noexcept { return node_->size; }
std::uint64_t TypeDescriptor::count() const noexcept { return node_->count; }

const TypeDescriptor& TypeDescriptor::inner() const {
  if (node_->inner.empty()) {
    throw Error(ErrorKind::kInternal,
                "inner() on a " + std::string(to_string(kind())) + " type");
  }
  return node_->inner.front();
}

std::span<const Field> TypeDescriptor::fields() const noexcept { return node_->fields; }
std::span<const TypeDescriptor> TypeDescriptor::params() const noexcept {
  return node_->params;
}

const std::optional<std::string>& TypeDescriptor::typedef_name() const noexcept {
  return node_->typedef_name;
}

TypeDescriptor TypeDescriptor::with_typedef_name(std::string name) const {
  auto n = std::make_shared<Node>(*node_);
  n->typedef_name = std::move(name);
  return TypeDescriptor(std::move(n));
}

namespace {

const std::string& tag_or_anon(const TypeDescriptor& t) {
  static const std::string anon(kAnonTag);
  return t.name().empty() ? anon : t.name();
}

void render_into(const TypeDescriptor& t, std::string& out);

void render_aggregate_body(const TypeDescriptor& t, std::string& out) {
  out += t.is(TypeKind::kStruct) ? "struct " : "union ";
  out += tag_or_anon(t);
  out += " {";
  for (const Field& f : t.fields()) {
    out += ' ';
    render_into(f.type, out);
    out += ' ';
    out += f.name;
    out += '@';
    out += std::to_string(f.offset);
    out += ';';
  }
  out += " }";
}

void render_into(const TypeDescriptor& t, std::string& out) {
  switch (t.kind()) {
    case TypeKind::kPrimitive:
      out += t.name();
      return;
    case TypeKind::kVoid:
      out += "void";
      return;
    case TypeKind::kDisappear:
      out += kDisappearText;
      return;
    case TypeKind::kEnum:
      out += "enum ";
      out += tag_or_anon(t);
      return;
    case TypeKind::kStruct:
    case TypeKind::kUnion:
      render_aggregate_body(t, out);
      return;
    case TypeKind::kPointer: {
      const TypeDescriptor& target = t.inner();
      if (target.is_aggregate() && !target.name().empty()) {
        out += target.is(TypeKind::kStruct) ? "struct " : "union ";
        out += target.name();
      } else {
        render_into(target, out);
      }
      out += " *";
      return;
    }
    case TypeKind::kArray: {
      // C order: int[2][3] is an array of 2 arrays of 3 ints.
      std::string dims;
      const TypeDescriptor* cur = &t;
      while (cur->is(TypeKind::kArray)) {
        dims += '[';
        dims += std::to_string(cur->count());
        dims += ']';
        cur = &cur->inner();
      }
      render_into(*cur, out);
      out += dims;
      return;
    }
    case TypeKind::kFunction: {
      render_into(t.inner(), out);
      out += " (";
      bool first = true;
      for (const TypeDescriptor& p : t.params()) {
        if (!first) out += ", ";
        first = false;
        render_into(p, out);
      }
      out += ')';
      return;
    }
  }
}

}  // namespace

std::string_view to_string(TypeKind kind) {
  switch (kind) {
    case TypeKind::kPrimitive: return "primitive";
    case TypeKind::kPointer: return "pointer";
    case TypeKind::kArray: return "array";
    case TypeKind::kStruct: return "struct";
    case TypeKind::kUnion: return "union";
    case TypeKind::kEnum: return "enum";
    case TypeKind::kFunction: return "function";
    case TypeKind::kVoid: return "void";
    case TypeKind::kDisappear: return "disappear";
  }
  return "?";
}

std::string render_type(const TypeDescriptor& t) {
  std::string out;
  render_into(t, out);
  return out;
}

bool types_equal(const TypeDescriptor& a, const TypeDescriptor& b) {
  return render_type(a) == render_type(b);
}

std::uint64_t size_of(const TypeDescriptor& t, std::uint64_t pointer_size) {
  switch (t.kind()) {
    case TypeKind::kPrimitive:
    case TypeKind::kEnum:
    case TypeKind::kStruct:
    case TypeKind::kUnion:
      return t.declared_size();
    case TypeKind::kPointer:
      return pointer_size;
    case TypeKind::kArray:
      return t.count() * size_of(t.inner(), pointer_size);
    case TypeKind::kFunction:
    case TypeKind::kVoid:
    case TypeKind::kDisappear:
      return 0;
  }
  return 0;
}

void validate_type(const TypeDescriptor& t) {
  switch (t.kind()) {
    case TypeKind::kPointer:
    case TypeKind::kArray:
      validate_type(t.inner());
      return;
    case TypeKind::kFunction:
      validate_type(t.inner());
      for (const auto& p : t.params()) validate_type(p);
      return;
    case TypeKind::kStruct:
    case TypeKind::kUnion: {
      const bool is_struct = t.is(TypeKind::kStruct);
      const std::string where = render_type(t);
      bool have_prev = false;
      std::uint64_t prev = 0;
      for (const Field& f : t.fields()) {
        const bool flexible = f.type.is(TypeKind::kArray) && f.type.count() == 0;
        if (f.size == 0 && !flexible) {
          throw Error(ErrorKind::kValidation,
                      "field '" + f.name + "' of " + where + " has size 0");
        }
        if (is_struct && have_prev && f.offset <= prev) {
          throw Error(ErrorKind::kValidation, "field '" + f.name + "' of " + where +
                                                  ": offsets must strictly increase");
        }
        if (f.offset + f.size > t.declared_size()) {
          throw Error(ErrorKind::kValidation,
                      "field '" + f.name + "' of " + where + " extends past size " +
                          std::to_string(t.declared_size()));
        }
        have_prev = true;
        prev = f.offset;
        validate_type(f.type);
      }
      return;
    }
    default:
      return;
  }
}

std::uint64_t primitive_size_by_name(std::string_view name) {
  static const std::unordered_map<std::string_view, std::uint64_t> kSizes = {
      {"char", 1}, {"signed char", 1}, {"unsigned char", 1}, {"_Bool", 1},
      {"bool", 1}, {"byte", 1}, {"sbyte", 1}, {"uchar", 1},
      {"short", 2}, {"short int", 2}, {"short unsigned int", 2},
      {"unsigned short", 2}, {"ushort", 2}, {"wchar16", 2},
      {"int", 4}, {"unsigned int", 4}, {"uint", 4}, {"float", 4}, {"wchar32", 4},
      {"long", 8}, {"long int", 8}, {"long unsigned int", 8},
      {"unsigned long", 8}, {"ulong", 8}, {"long long", 8},
      {"long long int", 8}, {"long long unsigned int", 8}, {"longlong", 8},
      {"ulonglong", 8}, {"double", 8}, {"long double", 16}, {"__int128", 16},
      {"__int128 unsigned", 16}, {"code", 1},
  };
  if (auto it = kSizes.find(name); it != kSizes.end()) return it->second;
  // Decompiler placeholders: undefined1..undefined8 and undefined.
  if (name == "undefined") return 1;
  if (name.starts_with("undefined")) {
    std::uint64_t n = 0;
    auto digits = name.substr(9);
    auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return n;
  }
  return 0;
}

// ---------------------------------------------------------------------------
// Text parser for the canonical grammar.

namespace {

class TypeTextParser {
 public:
  explicit TypeTextParser(std::string_view text) : text_(text) {}

  TypeDescriptor parse_all() {
    TypeDescriptor t = parse_type();
    skip_ws();
    if (pos_ != text_.size()) fail("trailing characters");
    return t;
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorKind::kParse, "type text '" + std::string(text_) + "' at offset " +
                                       std::to_string(pos_) + ": " + what);
  }

  void skip_ws() {
    while (pos_ < text_.size() && text_[pos_] == ' ') ++pos_;
  }

  bool peek(char c) {
    skip_ws();
    return pos_ < text_.size() && text_[pos_] == c;
  }

  void expect(char c) {
    if (!peek(c)) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  static bool word_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$' ||
           c == '<' || c == '>' || c == '.' || c == ':';
  }

  // A "word" is an identifier-ish run; `<anon>`, `<disappear>`, `<unknown>`
  // and C++-ish qualified names are single words.
  std::string_view peek_word() {
    skip_ws();
    std::size_t end = pos_;
    while (end < text_.size() && word_char(text_[end])) ++end;
    return text_.substr(pos_, end - pos_);
  }

  std::string_view take_word() {
    auto w = peek_word();
    if (w.empty()) fail("expected a name");
    pos_ += w.size();
    return w;
  }

  // True when the word at the cursor is immediately followed by '@', i.e. it
  // is a field name rather than part of a type spelling.
  bool word_is_field_name() {
    auto w = peek_word();
    if (w.empty()) return false;
    std::size_t after = pos_ + w.size();
    return after < text_.size() && text_[after] == '@';
  }

  std::uint64_t take_number() {
    skip_ws();
    std::uint64_t v = 0;
    auto [ptr, ec] = std::from_chars(text_.data() + pos_, text_.data() + text_.size(), v);
    if (ec != std::errc()) fail("expected a number");
    pos_ = static_cast<std::size_t>(ptr - text_.data());
    return v;
  }

  TypeDescriptor parse_aggregate(bool is_struct) {
    std::string tag(take_word());
    if (tag == kAnonTag) tag.clear();
    if (!peek('{')) {
      // Tag reference (only produced behind a pointer).
      return is_struct ? TypeDescriptor::structure(tag, {}, 0)
                       : TypeDescriptor::union_of(tag, {}, 0);
    }
    expect('{');
    std::vector<Field> fields;
    std::uint64_t extent = 0;
    while (!peek('}')) {
      Field f;
      f.type = parse_type();
      f.name = std::string(take_word());
      expect('@');
      f.offset = take_number();
      expect(';');
      f.size = size_of(f.type);
      extent = std::max(extent, f.offset + f.size);
      fields.push_back(std::move(f));
    }
    expect('}');
    return is_struct ? TypeDescriptor::structure(tag, std::move(fields), extent)
                     : TypeDescriptor::union_of(tag, std::move(fields), extent);
  }

  TypeDescriptor parse_base() {
    auto w = peek_word();
    if (w == "struct" || w == "union") {
      take_word();
      return parse_aggregate(w == "struct");
    }
    if (w == "enum") {
      take_word();
      std::string tag(take_word());
      if (tag == kAnonTag) tag.clear();
      return TypeDescriptor::enumeration(tag, 4);
    }
    if (w == kDisappearText) {
      take_word();
      return TypeDescriptor::disappear();
    }
    if (w == "void") {
      take_word();
      return TypeDescriptor::void_type();
    }
    // Multi-word primitive, e.g. `long unsigned int`.
    std::string name(take_word());
    while (!peek_word().empty() && !word_is_field_name()) {
      name += ' ';
      name += take_word();
    }
    const auto size = primitive_size_by_name(name);
    return TypeDescriptor::primitive(std::move(name), size);
  }

  TypeDescriptor parse_type() {
    TypeDescriptor t = parse_base();
    for (;;) {
      if (peek('*')) {
        ++pos_;
        t = TypeDescriptor::pointer(std::move(t));
      } else if (peek('[')) {
        std::vector<std::uint64_t> dims;
        while (peek('[')) {
          ++pos_;
          dims.push_back(take_number());
          expect(']');
        }
        for (auto it = dims.rbegin(); it != dims.rend(); ++it) {
          t = TypeDescriptor::array(std::move(t), *it);
        }
      } else if (peek('(')) {
        ++pos_;
        std::vector<TypeDescriptor> params;
        if (!peek(')')) {
          params.push_back(parse_type());
          while (peek(',')) {
            ++pos_;
            params.push_back(parse_type());
          }
        }
        expect(')');
        t = TypeDescriptor::function(std::move(t), std::move(params));
      } else {
        return t;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

TypeDescriptor parse_type_text(std::string_view text) {
  return TypeTextParser(text).parse_all();
}

}  // namespace retype
