#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/json_io.hpp"
#include "retype/predictors.hpp"

namespace retype {

/// The one comparison the metric uses.
bool score_variable(const TypeDescriptor& pred, const TypeDescriptor& gold);

enum class ReportRow : std::uint8_t { kOverall, kInTrain, kNotInTrain };
enum class ReportColumn : std::uint8_t { kOverall, kStructs, kDisappear, kNoDisappear };
inline constexpr std::size_t kReportRows = 3;
inline constexpr std::size_t kReportColumns = 4;

std::string_view to_string(ReportRow row);
std::string_view to_string(ReportColumn column);

struct Cell {
  std::uint64_t correct = 0;
  std::uint64_t total = 0;

  std::string percent() const;  // one decimal, "—" when empty
  bool operator==(const Cell&) const = default;
};

struct AccuracyReport {
  std::string predictor;
  std::string manifest_hash;
  std::string mode;
  std::array<std::array<Cell, kReportColumns>, kReportRows> cells{};

  Cell& at(ReportRow r, ReportColumn c) {
    return cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  const Cell& at(ReportRow r, ReportColumn c) const {
    return cells[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  /// Adds another shard's counts cell-wise.
  void merge(const AccuracyReport& other);
  /// Throws Error(kInternal) if a partition invariant fails.
  void check_partitions() const;
};

/// One prediction per test function, matched by (binary, function id), with
/// variables in input order.  Missing or extra predictions throw
/// Error(kCoverage) naming the function ids.
AccuracyReport aggregate(const CorpusSplit& test, const std::vector<Prediction>& preds);

Json report_to_json(const AccuracyReport& r);
AccuracyReport report_from_json(const Json& j);

std::string render_report_text(const AccuracyReport& r);
std::string render_report_csv(const AccuracyReport& r);
/// Inverse of render_report_csv (counts only).
AccuracyReport parse_report_csv(std::string_view csv);

}  // namespace retype
