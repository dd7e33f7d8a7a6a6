#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retype/json_io.hpp"
#include "retype/typelib.hpp"

namespace retype {

struct LexiconEntry {
  std::string text;
  TypeDescriptor type;
  std::uint64_t count = 0;
};

/// Closed, frequency-ranked type vocabulary.  Rank 0 is the most frequent
/// type.  `<unknown>` and `<disappear>` are always present.
class TypeLexicon {
 public:
  TypeLexicon() = default;

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const LexiconEntry& at(std::size_t rank) const { return entries_.at(rank); }
  const std::vector<LexiconEntry>& entries() const noexcept { return entries_; }

  std::optional<std::size_t> rank_of(const std::string& text) const;
  /// Rank of t, or of `<unknown>` when t is not in the vocabulary.
  std::size_t rank_or_unknown(const TypeDescriptor& t) const;
  std::size_t unknown_rank() const { return *rank_of(std::string(kUnknownText)); }
  std::size_t disappear_rank() const {
    return *rank_of(std::string(kDisappearText));
  }

  Json to_json() const;
  static TypeLexicon from_json(const Json& j);
  /// SHA-256 of the serialized lexicon; checkpoints record it.
  std::string digest() const;

 private:
  friend class LexiconBuilder;
  explicit TypeLexicon(std::vector<LexiconEntry> entries);

  std::vector<LexiconEntry> entries_;
  std::map<std::string, std::size_t, std::less<>> rank_;
};

/// Counts canonical spellings.  Counting is order-independent: the kept
/// descriptor for a spelling is the one with the smallest serialized form.
class LexiconBuilder {
 public:
  void add(const TypeDescriptor& t, std::uint64_t times = 1);
  void merge(const LexiconBuilder& other);
  std::uint64_t total() const noexcept { return total_; }

  /// Throws Error(kEmptyCorpus) when nothing was added.
  TypeLexicon finish(std::uint64_t min_count) const;

 private:
  struct Slot {
    TypeDescriptor type;
    std::string serialized;
    std::uint64_t count = 0;
  };
  std::map<std::string, Slot, std::less<>> slots_;
  std::uint64_t total_ = 0;
};

}  // namespace retype
