#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/lexicon.hpp"

namespace retype {

struct VariablePrediction {
  std::string variable;
  TypeDescriptor type;
  double confidence = 1.0;
};

/// One predictor's output for one function, ordered like input.variables.
struct Prediction {
  std::string binary_id;
  std::string function_id;
  std::string predictor;
  std::vector<VariablePrediction> variables;
};

inline constexpr std::string_view kIdentityPredictor = "identity";
inline constexpr std::string_view kMostFrequentPredictor = "most-frequent";
inline constexpr std::string_view kSizeConditionedPredictor = "size-conditioned";
inline constexpr std::string_view kRetyperPredictor = "retyper";

Prediction predict_identity(const LabeledExample& ex);

/// Every variable gets the lexicon's rank-0 type.
Prediction predict_most_frequent(const LabeledExample& ex, const TypeLexicon& lexicon);

/// Most frequent gold type per (rendered decompiler type, size), fitted on
/// the train split.  Ties go to the lexicographically smallest rendering.
class SizeConditionedTable {
 public:
  using Key = std::pair<std::string, std::uint64_t>;

  static SizeConditionedTable fit(const std::vector<LabeledExample>& train);

  const TypeDescriptor& lookup(const VariableRecord& v) const;
  const TypeDescriptor& fallback() const noexcept { return fallback_; }
  std::size_t size() const noexcept { return table_.size(); }

  Json to_json() const;
  static SizeConditionedTable from_json(const Json& j);

 private:
  std::map<Key, TypeDescriptor> table_;
  TypeDescriptor fallback_ = TypeDescriptor::disappear();
};

Prediction predict_size_conditioned(const LabeledExample& ex, const SizeConditionedTable& table);

/// One line per variable: {binary, function, variable, type, confidence,
/// predictor, manifest}.
void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds,
                       const std::string& manifest_hash);
/// Groups lines back into per-function predictions, in file order.
std::vector<Prediction> read_predictions(const std::filesystem::path& path);

}  // namespace retype
