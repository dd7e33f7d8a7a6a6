#include "retype/lexicon.hpp"

#include <algorithm>

#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/type_json.hpp"

namespace retype {

TypeLexicon::TypeLexicon(std::vector<LexiconEntry> entries) : entries_(std::move(entries)) {
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto [it, inserted] = rank_.emplace(entries_[i].text, i);
    if (!inserted) {
      throw Error(ErrorKind::kValidation, "duplicate lexicon entry '" + entries_[i].text + "'");
    }
  }
}

std::optional<std::size_t> TypeLexicon::rank_of(const std::string& text) const {
  if (auto it = rank_.find(text); it != rank_.end()) return it->second;
  return std::nullopt;
}

std::size_t TypeLexicon::rank_or_unknown(const TypeDescriptor& t) const {
  if (auto r = rank_of(render_type(t))) return *r;
  return unknown_rank();
}

Json TypeLexicon::to_json() const {
  Json entries = Json::array();
  for (const auto& e : entries_) {
    entries.push_back({{"text", e.text}, {"count", e.count}, {"type", type_to_json(e.type)}});
  }
  return Json{{"entries", std::move(entries)}};
}

TypeLexicon TypeLexicon::from_json(const Json& j) {
  const Json& arr = require(j, "entries");
  if (!arr.is_array()) throw Error(ErrorKind::kValidation, "lexicon entries must be an array");
  std::vector<LexiconEntry> entries;
  for (const Json& e : arr) {
    LexiconEntry entry;
    entry.text = require_string(e, "text");
    entry.count = require_uint(e, "count");
    entry.type = type_from_json(require(e, "type"), "lexicon.type");
    if (render_type(entry.type) != entry.text) {
      throw Error(ErrorKind::kValidation,
                  "lexicon entry '" + entry.text + "' does not match its type object");
    }
    entries.push_back(std::move(entry));
  }
  TypeLexicon lex(std::move(entries));
  if (!lex.rank_of(std::string(kUnknownText)) || !lex.rank_of(std::string(kDisappearText))) {
    throw Error(ErrorKind::kValidation, "lexicon lacks reserved <unknown>/<disappear> entries");
  }
  return lex;
}

std::string TypeLexicon::digest() const { return sha256_hex(dump_line(to_json())); }

void LexiconBuilder::add(const TypeDescriptor& t, std::uint64_t times) {
  if (times == 0) return;
  std::string text = render_type(t);
  std::string serialized = dump_line(type_to_json(t));
  auto it = slots_.find(text);
  if (it == slots_.end()) {
    slots_.emplace(std::move(text), Slot{t, std::move(serialized), times});
  } else {
    it->second.count += times;
    if (serialized < it->second.serialized) {
      it->second.type = t;
      it->second.serialized = std::move(serialized);
    }
  }
  total_ += times;
}

void LexiconBuilder::merge(const LexiconBuilder& other) {
  for (const auto& [text, slot] : other.slots_) {
    auto it = slots_.find(text);
    if (it == slots_.end()) {
      slots_.emplace(text, slot);
    } else {
      it->second.count += slot.count;
      if (slot.serialized < it->second.serialized) {
        it->second.type = slot.type;
        it->second.serialized = slot.serialized;
      }
    }
  }
  total_ += other.total_;
}

TypeLexicon LexiconBuilder::finish(std::uint64_t min_count) const {
  if (total_ == 0) {
    throw Error(ErrorKind::kEmptyCorpus, "cannot build a type lexicon from an empty corpus");
  }
  const std::string disappear(kDisappearText);
  const std::string unknown(kUnknownText);
  std::vector<LexiconEntry> entries;
  bool have_disappear = false;
  for (const auto& [text, slot] : slots_) {
    if (text == unknown) continue;  // reserved; never counted
    if (text == disappear) {
      entries.push_back({text, TypeDescriptor::disappear(), slot.count});
      have_disappear = true;
    } else if (slot.count >= min_count) {
      entries.push_back({text, slot.type, slot.count});
    }
  }
  if (!have_disappear) entries.push_back({disappear, TypeDescriptor::disappear(), 0});
  entries.push_back({unknown, TypeDescriptor::unknown(), 0});
  std::sort(entries.begin(), entries.end(), [](const LexiconEntry& a, const LexiconEntry& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.text < b.text;
  });
  return TypeLexicon(std::move(entries));
}

}  // namespace retype
