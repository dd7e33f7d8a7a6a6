#include "retype/model/vocab.hpp"

#include <algorithm>

#include "retype/error.hpp"

namespace retype::model {

TokenVocab::TokenVocab() : TokenVocab(std::vector<std::string>{}) {}

TokenVocab::TokenVocab(std::vector<std::string> tokens) {
  tokens_ = {"<unknown>", "<var>"};
  for (auto& t : tokens) tokens_.push_back(std::move(t));
  for (std::size_t i = 0; i < tokens_.size(); ++i) {
    if (!ids_.emplace(tokens_[i], i).second) {
      throw Error(ErrorKind::kValidation, "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }
}

TokenVocab TokenVocab::build(const std::vector<LabeledExample>& train, std::uint64_t min_count) {
  std::map<std::string, std::uint64_t> counts;
  for (const auto& ex : train) {
    for (const auto& t : ex.input.tokens.tokens) {
      if (!t.is_placeholder()) ++counts[t.text];
    }
  }
  std::vector<std::pair<std::string, std::uint64_t>> ranked;
  for (auto& [text, n] : counts) {
    if (n >= min_count && text != "<unknown>" && text != "<var>") ranked.emplace_back(text, n);
  }
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens;
  tokens.reserve(ranked.size());
  for (auto& [text, n] : ranked) tokens.push_back(std::move(text));
  return TokenVocab(std::move(tokens));
}

std::size_t TokenVocab::id_of(const std::string& text) const {
  auto it = ids_.find(text);
  return it == ids_.end() ? kUnknownId : it->second;
}

std::vector<std::size_t> TokenVocab::encode(const TokenSequence& seq) const {
  std::vector<std::size_t> ids;
  ids.reserve(seq.size());
  for (const auto& t : seq.tokens) ids.push_back(t.is_placeholder() ? kVarId : id_of(t.text));
  return ids;
}

Json TokenVocab::to_json() const {
  return Json(std::vector<std::string>(tokens_.begin() + 2, tokens_.end()));
}

TokenVocab TokenVocab::from_json(const Json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kValidation, "vocabulary must be an array of strings");
  std::vector<std::string> tokens;
  for (const auto& t : j) {
    if (!t.is_string()) throw Error(ErrorKind::kValidation, "vocabulary must be an array of strings");
    tokens.push_back(t.get<std::string>());
  }
  return TokenVocab(std::move(tokens));
}

}  // namespace retype::model
