#include "retype/eval.hpp"

#include <algorithm>
#include <charconv>
#include <map>
#include <set>
#include <sstream>

#include "retype/error.hpp"
#include "retype/stats.hpp"

namespace retype {

bool score_variable(const TypeDescriptor& pred, const TypeDescriptor& gold) {
  return types_equal(pred, gold);
}

std::string_view to_string(ReportRow row) {
  switch (row) {
    case ReportRow::kOverall: return "Overall";
    case ReportRow::kInTrain: return "In-Train";
    case ReportRow::kNotInTrain: return "Not In-Train";
  }
  return "?";
}

std::string_view to_string(ReportColumn column) {
  switch (column) {
    case ReportColumn::kOverall: return "Overall";
    case ReportColumn::kStructs: return "Structs";
    case ReportColumn::kDisappear: return "Disappear";
    case ReportColumn::kNoDisappear: return "No Disappear";
  }
  return "?";
}

std::string Cell::percent() const { return format_percent(correct, total, 1); }

void AccuracyReport::merge(const AccuracyReport& other) {
  for (std::size_t r = 0; r < kReportRows; ++r) {
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      cells[r][c].correct += other.cells[r][c].correct;
      cells[r][c].total += other.cells[r][c].total;
    }
  }
}

void AccuracyReport::check_partitions() const {
  for (std::size_t c = 0; c < kReportColumns; ++c) {
    for (auto field : {&Cell::correct, &Cell::total}) {
      if (cells[0][c].*field != cells[1][c].*field + cells[2][c].*field) {
        throw Error(ErrorKind::kInternal, "report rows do not partition column " +
                                              std::string(to_string(ReportColumn(c))));
      }
    }
  }
  for (std::size_t r = 0; r < kReportRows; ++r) {
    for (auto field : {&Cell::correct, &Cell::total}) {
      if (cells[r][0].*field != cells[r][2].*field + cells[r][3].*field) {
        throw Error(ErrorKind::kInternal, "disappear slices do not partition row " +
                                              std::string(to_string(ReportRow(r))));
      }
    }
  }
}

AccuracyReport aggregate(const CorpusSplit& test, const std::vector<Prediction>& preds) {
  std::map<std::pair<std::string_view, std::string_view>, const Prediction*> by_id;
  std::vector<std::string> problems;
  for (const auto& p : preds) {
    if (!by_id.emplace(std::pair<std::string_view, std::string_view>{p.binary_id, p.function_id}, &p).second) {
      problems.push_back("duplicate " + p.function_id);
    }
  }
  AccuracyReport r;
  std::size_t used = 0;
  for (const auto& ex : test.examples) {
    const auto id = ex.input.function_id();
    auto it = by_id.find({ex.input.binary_id, id});
    if (it == by_id.end()) {
      problems.push_back("missing " + id);
      continue;
    }
    ++used;
    const Prediction& p = *it->second;
    if (r.predictor.empty()) r.predictor = p.predictor;
    bool names_match = p.variables.size() == ex.input.variables.size();
    for (std::size_t i = 0; names_match && i < p.variables.size(); ++i) {
      names_match = p.variables[i].variable == ex.input.variables[i].decomp_name;
    }
    if (!names_match) {
      problems.push_back("variable mismatch in " + id);
      continue;
    }
    const auto row = ex.in_train.value_or(false) ? ReportRow::kInTrain : ReportRow::kNotInTrain;
    for (std::size_t i = 0; i < ex.gold.size(); ++i) {
      const auto& gold = ex.gold[i].type;
      const bool ok = score_variable(p.variables[i].type, gold);
      std::vector<ReportColumn> cols{ReportColumn::kOverall};
      if (gold.is(TypeKind::kStruct)) cols.push_back(ReportColumn::kStructs);
      cols.push_back(gold.is(TypeKind::kDisappear) ? ReportColumn::kDisappear
                                                   : ReportColumn::kNoDisappear);
      for (auto rr : {ReportRow::kOverall, row}) {
        for (auto c : cols) {
          auto& cell = r.at(rr, c);
          ++cell.total;
          cell.correct += ok;
        }
      }
    }
  }
  if (used != by_id.size()) {
    std::set<std::pair<std::string, std::string>> ids;
    for (const auto& ex : test.examples) ids.emplace(ex.input.binary_id, ex.input.function_id());
    for (const auto& p : preds) {
      if (!ids.count({p.binary_id, p.function_id})) problems.push_back("extra " + p.function_id);
    }
  }
  if (!problems.empty()) {
    std::string msg = "predictions do not cover the test split:";
    const std::size_t shown = std::min<std::size_t>(problems.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) msg += " " + problems[i] + ";";
    if (shown < problems.size()) msg += " and " + std::to_string(problems.size() - shown) + " more";
    throw Error(ErrorKind::kCoverage, msg);
  }
  r.check_partitions();
  return r;
}

Json report_to_json(const AccuracyReport& r) {
  Json rows = Json::object();
  for (std::size_t i = 0; i < kReportRows; ++i) {
    Json cols = Json::object();
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      const auto& cell = r.cells[i][c];
      cols[std::string(to_string(ReportColumn(c)))] = {{"correct", cell.correct},
                                                        {"total", cell.total}};
    }
    rows[std::string(to_string(ReportRow(i)))] = std::move(cols);
  }
  return Json{{"predictor", r.predictor},
              {"manifest", r.manifest_hash},
              {"mode", r.mode},
              {"lookup", "function, then globals"},
              {"cells", std::move(rows)}};
}

AccuracyReport report_from_json(const Json& j) {
  AccuracyReport r;
  r.predictor = require_string(j, "predictor");
  r.manifest_hash = require_string(j, "manifest");
  r.mode = require_string(j, "mode");
  const Json& rows = require(j, "cells");
  for (std::size_t i = 0; i < kReportRows; ++i) {
    const Json& cols = require(rows, to_string(ReportRow(i)));
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      const Json& cell = require(cols, to_string(ReportColumn(c)));
      r.cells[i][c] = {require_uint(cell, "correct"), require_uint(cell, "total")};
    }
  }
  return r;
}

namespace {

std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xc0) != 0x80;
  return n;
}

void pad_to(std::string& out, std::string_view s, std::size_t width, bool left_align) {
  const std::size_t fill = width - std::min(width, display_width(s));
  if (!left_align) out.append(fill, ' ');
  out += s;
  if (left_align) out.append(fill, ' ');
}

}  // namespace

std::string render_report_text(const AccuracyReport& r) {
  const std::string model = r.predictor.empty() ? "-" : r.predictor;
  std::size_t first = std::max<std::size_t>({display_width("Model"), display_width(model), 1});
  std::array<std::array<std::string, kReportColumns>, kReportRows> pct;
  std::array<std::array<std::string, kReportColumns>, kReportRows> tot;
  std::array<std::size_t, kReportRows * kReportColumns> width{};
  for (std::size_t i = 0; i < kReportRows; ++i) {
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      pct[i][c] = r.cells[i][c].percent();
      tot[i][c] = std::to_string(r.cells[i][c].total);
      width[i * kReportColumns + c] = std::max({display_width(to_string(ReportColumn(c))),
                                                display_width(pct[i][c]), tot[i][c].size()});
    }
  }
  // Group headers span their four columns.
  std::string groups;
  pad_to(groups, "", first, true);
  for (std::size_t i = 0; i < kReportRows; ++i) {
    std::size_t span = 0;
    for (std::size_t c = 0; c < kReportColumns; ++c) span += 2 + width[i * kReportColumns + c];
    groups += "  ";
    pad_to(groups, to_string(ReportRow(i)), span - 2, true);
  }
  while (!groups.empty() && groups.back() == ' ') groups.pop_back();

  std::string header;
  std::string values;
  std::string totals;
  pad_to(header, "Model", first, true);
  pad_to(values, model, first, true);
  pad_to(totals, "n", first, true);
  for (std::size_t i = 0; i < kReportRows; ++i) {
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      const auto w = width[i * kReportColumns + c];
      header += "  ";
      values += "  ";
      totals += "  ";
      pad_to(header, to_string(ReportColumn(c)), w, false);
      pad_to(values, pct[i][c], w, false);
      pad_to(totals, tot[i][c], w, false);
    }
  }
  return groups + "\n" + header + "\n" + values + "\n" + totals + "\n";
}

std::string render_report_csv(const AccuracyReport& r) {
  std::string out = "predictor,row,column,correct,total,percent\n";
  for (std::size_t i = 0; i < kReportRows; ++i) {
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      const auto& cell = r.cells[i][c];
      out += r.predictor + "," + std::string(to_string(ReportRow(i))) + "," +
             std::string(to_string(ReportColumn(c))) + "," + std::to_string(cell.correct) + "," +
             std::to_string(cell.total) + "," + (cell.total ? cell.percent() : "") + "\n";
    }
  }
  return out;
}

AccuracyReport parse_report_csv(std::string_view csv) {
  AccuracyReport r;
  std::istringstream in{std::string(csv)};
  std::string line;
  std::size_t lineno = 0;
  std::array<std::array<bool, kReportColumns>, kReportRows> seen{};
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::kParse, "report csv line " + std::to_string(lineno) + ": " + why);
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1) {
      if (line != "predictor,row,column,correct,total,percent") bad("unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::size_t start = 0;
    for (;;) {
      auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    if (f.size() != 6) bad("expected 6 fields");
    std::size_t row = kReportRows;
    std::size_t col = kReportColumns;
    for (std::size_t i = 0; i < kReportRows; ++i) {
      if (f[1] == to_string(ReportRow(i))) row = i;
    }
    for (std::size_t c = 0; c < kReportColumns; ++c) {
      if (f[2] == to_string(ReportColumn(c))) col = c;
    }
    if (row == kReportRows || col == kReportColumns) bad("unknown cell " + f[1] + "/" + f[2]);
    if (seen[row][col]) bad("duplicate cell " + f[1] + "/" + f[2]);
    seen[row][col] = true;
    auto num = [&](const std::string& s) {
      std::uint64_t v = 0;
      auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
      if (s.empty() || ec != std::errc() || p != s.data() + s.size()) bad("bad count '" + s + "'");
      return v;
    };
    r.predictor = f[0];
    r.cells[row][col] = {num(f[3]), num(f[4])};
  }
  for (const auto& row : seen) {
    for (bool s : row) {
      if (!s) throw Error(ErrorKind::kParse, "report csv is missing cells");
    }
  }
  return r;
}

}  // namespace retype
