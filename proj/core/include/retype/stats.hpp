#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "retype/corpus.hpp"
#include "retype/json_io.hpp"

namespace retype {

/// Raw counts behind the corpus tables.  Percentages are derived on demand
/// and are nullopt when their denominator is zero.
struct CorpusStats {
  std::uint64_t binaries = 0;
  std::uint64_t variables = 0;
  std::uint64_t structs = 0;
  std::uint64_t disappear = 0;
  std::uint64_t functions = 0;
  std::uint64_t unique_functions = 0;
  std::uint64_t all_disappear = 0;  // functions with >= 1 variable, every one disappear
  std::uint64_t no_disappear = 0;
  std::uint64_t in_train = 0;
  std::uint64_t in_train_flagged = 0;  // functions carrying an in_train flag

  std::optional<double> pct_structs() const;
  std::optional<double> pct_disappear() const;
  std::optional<double> pct_all_disappear() const;
  std::optional<double> pct_no_disappear() const;
  std::optional<double> pct_in_train() const;

  bool operator==(const CorpusStats&) const = default;
};

CorpusStats compute_stats(const CorpusSplit& split);

Json stats_to_json(const CorpusStats& s);
CorpusStats stats_from_json(const Json& j);

/// num/den as a percentage with `decimals` digits, rounded half away from
/// zero in exact integer arithmetic.  "—" when den is 0.
std::string format_percent(std::uint64_t num, std::uint64_t den, int decimals);

/// Column set of the corpus tables.  kTrain: binaries, variables, structs,
/// disappear, unique functions.  kTest adds functions, all/no disappear and
/// in-train, and drops unique functions.
enum class StatsLayout : std::uint8_t { kTrain, kTest };

StatsLayout default_layout(SplitName split);

/// Two rows (header, values), columns padded to a common width.
std::string render_stats_table(const CorpusStats& s, std::string_view label, StatsLayout layout);
/// Header plus one row of raw counts.
std::string render_stats_csv(const CorpusStats& s, std::string_view label);

}  // namespace retype
