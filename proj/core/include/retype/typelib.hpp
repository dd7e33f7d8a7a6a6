#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace retype {

enum class TypeKind : std::uint8_t {
  kPrimitive,
  kPointer,
  kArray,
  kStruct,
  kUnion,
  kEnum,
  kFunction,
  kVoid,
  kDisappear,
};

std::string_view to_string(TypeKind kind);

inline constexpr std::string_view kDisappearText = "<disappear>";
inline constexpr std::string_view kUnknownText = "<unknown>";
inline constexpr std::string_view kAnonTag = "<anon>";
inline constexpr std::uint64_t kDefaultPointerSize = 8;

struct Field;

/// Immutable C-level type.  Copies share structure, so passing by value is
/// cheap and instances may be shared across threads.
///
/// A struct or union reached through a pointer may be a *reference*: it keeps
/// its tag and size but no fields.  Pointers render named aggregates by tag
/// only, so references and complete definitions compare equal there; this is
/// also what keeps self-referential types (`struct node { struct node *next; }`)
/// finite.
class TypeDescriptor {
 public:
  /// void
  TypeDescriptor();

  static TypeDescriptor primitive(std::string name, std::uint64_t size);
  static TypeDescriptor pointer(TypeDescriptor target);
  static TypeDescriptor array(TypeDescriptor element, std::uint64_t count);
  static TypeDescriptor structure(std::string tag, std::vector<Field> fields,
                                  std::uint64_t size);
  static TypeDescriptor union_of(std::string tag, std::vector<Field> members,
                                 std::uint64_t size);
  static TypeDescriptor enumeration(std::string tag, std::uint64_t size);
  static TypeDescriptor function(TypeDescriptor return_type,
                                 std::vector<TypeDescriptor> params);
  static TypeDescriptor void_type();
  static TypeDescriptor disappear();
  /// Lexicon placeholder for types below the frequency threshold.  Modeled as a
  /// zero-sized primitive so it is never size-masked.
  static TypeDescriptor unknown();

  TypeKind kind() const noexcept;
  bool is(TypeKind k) const noexcept { return kind() == k; }
  bool is_aggregate() const noexcept {
    return is(TypeKind::kStruct) || is(TypeKind::kUnion);
  }

  /// Primitive name, or the tag of a struct/union/enum ("" when anonymous).
  const std::string& name() const noexcept;
  /// Declared byte size for primitive, enum, struct and union.  0 otherwise.
  std::uint64_t declared_size() const noexcept;
  /// Pointer target, array element, or function return type.
  const TypeDescriptor& inner() const;
  /// Array element count.
  std::uint64_t count() const noexcept;
  std::span<const Field> fields() const noexcept;
  std::span<const TypeDescriptor> params() const noexcept;

  /// Typedef spelling the type was reached through.  Metadata only: never
  /// rendered, never compared.
  const std::optional<std::string>& typedef_name() const noexcept;
  TypeDescriptor with_typedef_name(std::string name) const;

 private:
  struct Node;
  explicit TypeDescriptor(std::shared_ptr<const Node> node);
  std::shared_ptr<const Node> node_;
};

struct Field {
  std::string name;
  TypeDescriptor type;
  std::uint64_t offset = 0;
  std::uint64_t size = 0;
};

/// Canonical spelling, e.g. `struct S { int x@0; char * y@8; }`.  The grammar
/// is documented in docs/type-grammar.md.
std::string render_type(const TypeDescriptor& t);

/// Exact, case-sensitive comparison of canonical spellings.  This is the only
/// type comparison the evaluation uses.
bool types_equal(const TypeDescriptor& a, const TypeDescriptor& b);

std::uint64_t size_of(const TypeDescriptor& t,
                      std::uint64_t pointer_size = kDefaultPointerSize);

/// Throws Error(kValidation) naming the offending field when a struct/union
/// violates the layout invariants.
void validate_type(const TypeDescriptor& t);

/// Inverse of render_type up to information the spelling does not carry
/// (typedef names, aggregate padding, sizes of unrecognized primitives).
/// render_type(parse_type_text(render_type(t))) == render_type(t).
TypeDescriptor parse_type_text(std::string_view text);

/// Byte size of a primitive spelled `name` under LP64; 0 when unknown.
/// Knows C base types as emitted by gcc/clang DWARF and the decompiler's
/// `undefinedN`, `uint`, `ulong`, ... spellings.
std::uint64_t primitive_size_by_name(std::string_view name);

}  // namespace retype
