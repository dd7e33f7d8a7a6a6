#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/json_io.hpp"

namespace retype::model {

/// Code-token vocabulary.  Id 0 is `<unknown>`, id 1 stands for every
/// placeholder, the rest are train tokens by descending count then text.
class TokenVocab {
 public:
  static constexpr std::size_t kUnknownId = 0;
  static constexpr std::size_t kVarId = 1;

  TokenVocab();
  static TokenVocab build(const std::vector<LabeledExample>& train, std::uint64_t min_count = 1);

  std::size_t size() const noexcept { return tokens_.size(); }
  const std::string& token(std::size_t id) const { return tokens_.at(id); }
  std::size_t id_of(const std::string& text) const;
  std::vector<std::size_t> encode(const TokenSequence& seq) const;

  Json to_json() const;
  static TokenVocab from_json(const Json& j);

 private:
  explicit TokenVocab(std::vector<std::string> tokens);

  std::vector<std::string> tokens_;
  std::map<std::string, std::size_t, std::less<>> ids_;
};

}  // namespace retype::model
