#include "retype/stats.hpp"

#include <algorithm>
#include <unordered_set>
#include <vector>

namespace retype {
namespace {

std::optional<double> ratio(std::uint64_t num, std::uint64_t den) {
  if (den == 0) return std::nullopt;
  return 100.0 * static_cast<double>(num) / static_cast<double>(den);
}

std::uint64_t pow10(int n) {
  std::uint64_t p = 1;
  while (n-- > 0) p *= 10;
  return p;
}

}  // namespace

std::optional<double> CorpusStats::pct_structs() const { return ratio(structs, variables); }
std::optional<double> CorpusStats::pct_disappear() const { return ratio(disappear, variables); }
std::optional<double> CorpusStats::pct_all_disappear() const {
  return ratio(all_disappear, functions);
}
std::optional<double> CorpusStats::pct_no_disappear() const {
  return ratio(no_disappear, functions);
}
std::optional<double> CorpusStats::pct_in_train() const {
  return ratio(in_train, in_train_flagged);
}

CorpusStats compute_stats(const CorpusSplit& split) {
  CorpusStats s;
  std::unordered_set<std::string_view> binaries;
  std::unordered_set<std::uint64_t> bodies;
  for (const auto& ex : split.examples) {
    binaries.insert(ex.input.binary_id);
    bodies.insert(ex.fingerprint());
    ++s.functions;
    std::uint64_t gone = 0;
    for (const auto& g : ex.gold) {
      ++s.variables;
      if (g.flag == VariableFlag::kDisappear) ++gone;
      if (g.type.is(TypeKind::kStruct)) ++s.structs;
    }
    s.disappear += gone;
    if (!ex.gold.empty() && gone == ex.gold.size()) ++s.all_disappear;
    if (gone == 0) ++s.no_disappear;
    if (ex.in_train) {
      ++s.in_train_flagged;
      if (*ex.in_train) ++s.in_train;
    }
  }
  s.binaries = binaries.size();
  s.unique_functions = bodies.size();
  return s;
}

Json stats_to_json(const CorpusStats& s) {
  auto pct = [](std::optional<double> p) { return p ? Json(*p) : Json(nullptr); };
  return Json{{"binaries", s.binaries},
              {"variables", s.variables},
              {"structs", s.structs},
              {"disappear", s.disappear},
              {"functions", s.functions},
              {"unique_functions", s.unique_functions},
              {"all_disappear", s.all_disappear},
              {"no_disappear", s.no_disappear},
              {"in_train", s.in_train},
              {"in_train_flagged", s.in_train_flagged},
              {"pct_structs", pct(s.pct_structs())},
              {"pct_disappear", pct(s.pct_disappear())},
              {"pct_all_disappear", pct(s.pct_all_disappear())},
              {"pct_no_disappear", pct(s.pct_no_disappear())},
              {"pct_in_train", pct(s.pct_in_train())}};
}

CorpusStats stats_from_json(const Json& j) {
  CorpusStats s;
  s.binaries = require_uint(j, "binaries");
  s.variables = require_uint(j, "variables");
  s.structs = require_uint(j, "structs");
  s.disappear = require_uint(j, "disappear");
  s.functions = require_uint(j, "functions");
  s.unique_functions = require_uint(j, "unique_functions");
  s.all_disappear = require_uint(j, "all_disappear");
  s.no_disappear = require_uint(j, "no_disappear");
  s.in_train = require_uint(j, "in_train");
  s.in_train_flagged = require_uint(j, "in_train_flagged");
  return s;
}

std::string format_percent(std::uint64_t num, std::uint64_t den, int decimals) {
  if (den == 0) return "—";
  const std::uint64_t scale = pow10(decimals);
  const unsigned __int128 q = static_cast<unsigned __int128>(num) * 100 * scale;
  const auto scaled = static_cast<std::uint64_t>((2 * q + den) / (2 * static_cast<unsigned __int128>(den)));
  std::string out = std::to_string(scaled / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(scaled % scale);
    out += '.';
    out.append(static_cast<std::size_t>(decimals) - frac.size(), '0');
    out += frac;
  }
  return out;
}

StatsLayout default_layout(SplitName split) {
  return split == SplitName::kTest ? StatsLayout::kTest : StatsLayout::kTrain;
}

namespace {

std::size_t display_width(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) n += (c & 0xc0) != 0x80;
  return n;
}

std::string pad_left(std::string_view s, std::size_t width) {
  std::string out(width - std::min(width, display_width(s)), ' ');
  out += s;
  return out;
}

std::string pad_right(std::string_view s, std::size_t width) {
  std::string out(s);
  out.append(width - std::min(width, display_width(s)), ' ');
  return out;
}

}  // namespace

std::string render_stats_table(const CorpusStats& s, std::string_view label, StatsLayout layout) {
  std::vector<std::pair<std::string, std::string>> cols;
  cols.emplace_back("Split", std::string(label));
  cols.emplace_back("# Binaries", std::to_string(s.binaries));
  cols.emplace_back("# Variables", std::to_string(s.variables));
  cols.emplace_back("% Structs", format_percent(s.structs, s.variables, 2));
  cols.emplace_back("% Disappear", format_percent(s.disappear, s.variables, 2));
  if (layout == StatsLayout::kTrain) {
    cols.emplace_back("# Unique Functions", std::to_string(s.unique_functions));
  } else {
    cols.emplace_back("# Functions", std::to_string(s.functions));
    cols.emplace_back("% All Disappear", format_percent(s.all_disappear, s.functions, 2));
    cols.emplace_back("% No disappear", format_percent(s.no_disappear, s.functions, 2));
    cols.emplace_back("% In-Train", format_percent(s.in_train, s.in_train_flagged, 2));
  }
  std::string head;
  std::string row;
  for (std::size_t i = 0; i < cols.size(); ++i) {
    const auto& [h, v] = cols[i];
    const std::size_t w = std::max(display_width(h), display_width(v));
    if (i > 0) {
      head += "  ";
      row += "  ";
    }
    head += i == 0 ? pad_right(h, w) : pad_left(h, w);
    row += i == 0 ? pad_right(v, w) : pad_left(v, w);
  }
  return head + "\n" + row + "\n";
}

std::string render_stats_csv(const CorpusStats& s, std::string_view label) {
  std::string out =
      "split,binaries,variables,structs,disappear,functions,unique_functions,all_disappear,"
      "no_disappear,in_train,in_train_flagged\n";
  out += std::string(label);
  for (auto v : {s.binaries, s.variables, s.structs, s.disappear, s.functions, s.unique_functions,
                 s.all_disappear, s.no_disappear, s.in_train, s.in_train_flagged}) {
    out += ',';
    out += std::to_string(v);
  }
  out += '\n';
  return out;
}

}  // namespace retype
