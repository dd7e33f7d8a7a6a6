#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "retype/dwarf_index.hpp"
#include "retype/ingest.hpp"
#include "retype/json_io.hpp"
#include "retype/lexicon.hpp"

namespace retype {

enum class VariableFlag : std::uint8_t { kRecovered, kDisappear };

std::string_view to_string(VariableFlag flag);

struct GoldLabel {
  VariableFlag flag = VariableFlag::kDisappear;
  TypeDescriptor type = TypeDescriptor::disappear();
};

/// One training/evaluation unit: the model-facing view of a function plus a
/// gold label for each of its variables (same order as input.variables).
struct LabeledExample {
  FunctionRecord input;
  std::vector<GoldLabel> gold;
  std::optional<bool> in_train;  // set on the test split only

  std::uint64_t fingerprint() const { return body_fingerprint(input.tokens, input.function); }
};

enum class SplitName : std::uint8_t { kTrain, kValid, kTest };
std::string_view to_string(SplitName name);

struct CorpusSplit {
  SplitName name = SplitName::kTrain;
  std::vector<LabeledExample> examples;
  std::set<std::string> binary_ids;
};

/// How gold labels reach the model input.  Aligned: the stripped view is the
/// input and labels travel from the debug view by storage location.
/// Debug-direct: the debug view itself is the input.
enum class AlignmentMode : std::uint8_t { kAligned, kDebugDirect };
std::string_view to_string(AlignmentMode mode);
AlignmentMode alignment_mode_from(std::string_view text);

// ---- labeling ---------------------------------------------------------------

/// Gold label per variable of a debug-view record, indexed like
/// debug_view.variables: names found by lookup() are recovered with their
/// DWARF type, every other name is disappear.  Throws Error(kBinaryMismatch)
/// when the index belongs to another binary and Error(kValidation) when the
/// record is not a debug view.
std::vector<GoldLabel> label_disappear(const FunctionRecord& debug_view, const DwarfIndex& index);

/// For each stripped variable, the index of the debug variable with the same
/// (storage kind, storage value, size), or nullopt (synthetic disappear).
/// Throws Error(kAmbiguousAlignment) when either side repeats a storage key
/// and Error(kBinaryMismatch) when the two records are different functions.
std::vector<std::optional<std::size_t>> align_variables(const FunctionRecord& stripped,
                                                        const FunctionRecord& debug);

/// Aligned-mode example: stripped input, labels carried over from the debug
/// view's label_disappear result.
LabeledExample label_aligned(const FunctionRecord& stripped, const FunctionRecord& debug,
                             const DwarfIndex& index);
LabeledExample label_debug_direct(const FunctionRecord& debug, const DwarfIndex& index);

// ---- filtering --------------------------------------------------------------

enum class RejectReason : std::uint8_t { kTimeout, kUnclean, kNoVariables };
std::string_view to_string(RejectReason reason);

/// nullopt keeps the example.
std::optional<RejectReason> filter_function(const LabeledExample& ex);

// ---- splitting --------------------------------------------------------------

struct SplitRatios {
  double train = 0.8;
  double valid = 0.1;
  double test = 0.1;
};

/// Parses "0.8,0.1,0.1".  Throws Error(kValidation) unless all three are
/// positive and sum to 1.
SplitRatios parse_ratios(std::string_view text);
void validate_ratios(const SplitRatios& r);

/// Split a binary lands in: a pure function of (binary_id, seed).
SplitName assign_split(std::string_view binary_id, const SplitRatios& ratios, std::uint64_t seed);

/// Per-binary split.  Example order inside each split is sorted by
/// (binary_id, entry), so arrival order does not matter.  Throws
/// Error(kEmptyCorpus) for empty input.
std::array<CorpusSplit, 3> split_corpus(std::vector<LabeledExample> examples,
                                        const SplitRatios& ratios, std::uint64_t seed);

/// Throws Error(kValidation) when two splits share a binary.
void check_split_disjoint(const std::array<CorpusSplit, 3>& splits);

/// Returns `test` with in_train set from body fingerprints of `train`.
CorpusSplit mark_in_train(CorpusSplit test, const CorpusSplit& train);

/// Prediction vocabulary over gold types.  Throws Error(kEmptyCorpus).
TypeLexicon build_type_lexicon(const std::vector<LabeledExample>& corpus, std::uint64_t min_count);

// ---- whole-corpus build -----------------------------------------------------

struct CorpusOptions {
  AlignmentMode mode = AlignmentMode::kAligned;
  SplitRatios ratios;
  std::uint64_t seed = 1;
};

struct BuildAccounting {
  std::map<std::string, std::uint64_t> rejected;  // reason -> functions
  std::uint64_t records_in = 0;
  std::uint64_t kept = 0;
};

struct BuiltCorpus {
  std::array<CorpusSplit, 3> splits;
  BuildAccounting accounting;

  CorpusSplit& train() { return splits[0]; }
  CorpusSplit& valid() { return splits[1]; }
  CorpusSplit& test() { return splits[2]; }
  const CorpusSplit& train() const { return splits[0]; }
  const CorpusSplit& valid() const { return splits[1]; }
  const CorpusSplit& test() const { return splits[2]; }
};

/// Labels, filters, splits and marks in-train.  `records` may mix debug and
/// stripped views of many binaries; `indices` is keyed by binary id.
BuiltCorpus build_corpus(const std::vector<FunctionRecord>& records,
                         const std::map<std::string, DwarfIndex>& indices,
                         const CorpusOptions& options);

// ---- persistence ------------------------------------------------------------

Json example_to_json(const LabeledExample& ex, const std::string& manifest_hash);
LabeledExample example_from_json(const Json& j, std::string_view context);

/// Writes train/valid/test.jsonl (each record stamped with manifest_hash).
void write_split(const std::filesystem::path& path, const CorpusSplit& split,
                 const std::string& manifest_hash);
/// With `expected_manifest`, every record must carry that hash.
CorpusSplit read_split(const std::filesystem::path& path, SplitName name,
                       const std::string* expected_manifest = nullptr);

}  // namespace retype
