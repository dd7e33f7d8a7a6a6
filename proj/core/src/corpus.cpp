#include "retype/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <unordered_set>

#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/type_json.hpp"

namespace retype {

std::string_view to_string(VariableFlag flag) {
  return flag == VariableFlag::kRecovered ? "recovered" : "disappear";
}

std::string_view to_string(SplitName name) {
  switch (name) {
    case SplitName::kTrain: return "train";
    case SplitName::kValid: return "valid";
    case SplitName::kTest: return "test";
  }
  return "?";
}

std::string_view to_string(AlignmentMode mode) {
  return mode == AlignmentMode::kAligned ? "aligned" : "debug-direct";
}

AlignmentMode alignment_mode_from(std::string_view text) {
  if (text == "aligned") return AlignmentMode::kAligned;
  if (text == "debug-direct") return AlignmentMode::kDebugDirect;
  throw Error(ErrorKind::kValidation,
              "unknown mode '" + std::string(text) + "' (expected aligned or debug-direct)");
}

std::string_view to_string(RejectReason reason) {
  switch (reason) {
    case RejectReason::kTimeout: return "timeout";
    case RejectReason::kUnclean: return "unclean";
    case RejectReason::kNoVariables: return "no-variables";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Labeling

std::vector<GoldLabel> label_disappear(const FunctionRecord& debug_view, const DwarfIndex& index) {
  if (debug_view.view != View::kDebug) {
    throw Error(ErrorKind::kValidation,
                debug_view.function_id() + ": disappear labeling needs the debug view");
  }
  if (debug_view.binary_id != index.binary_id()) {
    throw Error(ErrorKind::kBinaryMismatch, "record " + debug_view.function_id() + " of binary " +
                                                debug_view.binary_id + " labeled with index of " +
                                                index.binary_id());
  }
  std::vector<GoldLabel> labels;
  labels.reserve(debug_view.variables.size());
  for (const auto& v : debug_view.variables) {
    if (auto t = lookup(index, debug_view.function, v.decomp_name, debug_view.entry)) {
      labels.push_back({VariableFlag::kRecovered, *t});
    } else {
      labels.push_back({VariableFlag::kDisappear, TypeDescriptor::disappear()});
    }
  }
  return labels;
}

std::vector<std::optional<std::size_t>> align_variables(const FunctionRecord& stripped,
                                                        const FunctionRecord& debug) {
  if (stripped.binary_id != debug.binary_id || stripped.entry != debug.entry) {
    throw Error(ErrorKind::kBinaryMismatch, "cannot align " + stripped.function_id() + " (" +
                                                stripped.binary_id + ") with " +
                                                debug.function_id() + " (" + debug.binary_id + ")");
  }
  std::map<StorageLocation, std::size_t> debug_keys;
  for (std::size_t i = 0; i < debug.variables.size(); ++i) {
    if (!debug_keys.emplace(debug.variables[i].storage, i).second) {
      throw Error(ErrorKind::kAmbiguousAlignment,
                  debug.function_id() + ": debug variables share storage with '" +
                      debug.variables[i].decomp_name + "'");
    }
  }
  std::set<StorageLocation> stripped_keys;
  std::vector<std::optional<std::size_t>> out;
  out.reserve(stripped.variables.size());
  for (const auto& v : stripped.variables) {
    if (!stripped_keys.insert(v.storage).second) {
      throw Error(ErrorKind::kAmbiguousAlignment,
                  stripped.function_id() + ": stripped variables share storage with '" +
                      v.decomp_name + "'");
    }
    if (auto it = debug_keys.find(v.storage); it != debug_keys.end()) {
      out.push_back(it->second);
    } else {
      out.push_back(std::nullopt);
    }
  }
  return out;
}

LabeledExample label_aligned(const FunctionRecord& stripped, const FunctionRecord& debug,
                             const DwarfIndex& index) {
  const auto debug_labels = label_disappear(debug, index);
  const auto alignment = align_variables(stripped, debug);
  LabeledExample ex;
  ex.input = stripped;
  ex.gold.reserve(alignment.size());
  for (const auto& match : alignment) {
    ex.gold.push_back(match ? debug_labels[*match] : GoldLabel{});
  }
  return ex;
}

LabeledExample label_debug_direct(const FunctionRecord& debug, const DwarfIndex& index) {
  LabeledExample ex;
  ex.input = debug;
  ex.gold = label_disappear(debug, index);
  return ex;
}

// ---------------------------------------------------------------------------
// Filtering

std::optional<RejectReason> filter_function(const LabeledExample& ex) {
  switch (ex.input.status) {
    case DecompileStatus::kTimeout:
      return RejectReason::kTimeout;
    case DecompileStatus::kFailed:
      return RejectReason::kUnclean;
    case DecompileStatus::kOk:
      break;
  }
  if (ex.input.tokens.empty()) return RejectReason::kUnclean;  // e.g. external thunk
  if (ex.input.tokens.placeholder_count() == 0) return RejectReason::kNoVariables;
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Splitting

void validate_ratios(const SplitRatios& r) {
  if (!(r.train > 0 && r.valid > 0 && r.test > 0) ||
      std::abs(r.train + r.valid + r.test - 1.0) > 1e-9) {
    std::ostringstream os;
    os << "split ratios must be positive and sum to 1 (got " << r.train << "," << r.valid << ","
       << r.test << ")";
    throw Error(ErrorKind::kValidation, os.str());
  }
}

SplitRatios parse_ratios(std::string_view text) {
  std::vector<double> parts;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto comma = text.find(',', start);
    auto piece = text.substr(start, comma == std::string_view::npos ? text.npos : comma - start);
    try {
      std::size_t used = 0;
      const std::string s(piece);
      parts.push_back(std::stod(s, &used));
      if (used != s.size()) throw std::invalid_argument("junk");
    } catch (const std::exception&) {
      throw Error(ErrorKind::kValidation, "--ratios: cannot parse '" + std::string(text) + "'");
    }
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  if (parts.size() != 3) {
    throw Error(ErrorKind::kValidation, "--ratios: expected three comma-separated values");
  }
  SplitRatios r{parts[0], parts[1], parts[2]};
  validate_ratios(r);
  return r;
}

SplitName assign_split(std::string_view binary_id, const SplitRatios& ratios, std::uint64_t seed) {
  const std::uint64_t h = mix64(fnv1a64(binary_id) ^ mix64(seed));
  const double u = static_cast<double>(h >> 11) * 0x1.0p-53;
  if (u < ratios.train) return SplitName::kTrain;
  if (u < ratios.train + ratios.valid) return SplitName::kValid;
  return SplitName::kTest;
}

namespace {

void sort_examples(std::vector<LabeledExample>& v) {
  std::sort(v.begin(), v.end(), [](const LabeledExample& a, const LabeledExample& b) {
    if (a.input.binary_id != b.input.binary_id) return a.input.binary_id < b.input.binary_id;
    if (a.input.entry != b.input.entry) return a.input.entry < b.input.entry;
    return a.input.function < b.input.function;
  });
}

}  // namespace

std::array<CorpusSplit, 3> split_corpus(std::vector<LabeledExample> examples,
                                        const SplitRatios& ratios, std::uint64_t seed) {
  validate_ratios(ratios);
  if (examples.empty()) throw Error(ErrorKind::kEmptyCorpus, "cannot split an empty corpus");
  std::array<CorpusSplit, 3> splits;
  splits[0].name = SplitName::kTrain;
  splits[1].name = SplitName::kValid;
  splits[2].name = SplitName::kTest;
  for (auto& ex : examples) {
    const auto which = static_cast<std::size_t>(assign_split(ex.input.binary_id, ratios, seed));
    splits[which].binary_ids.insert(ex.input.binary_id);
    splits[which].examples.push_back(std::move(ex));
  }
  for (auto& s : splits) sort_examples(s.examples);
  check_split_disjoint(splits);
  return splits;
}

void check_split_disjoint(const std::array<CorpusSplit, 3>& splits) {
  for (std::size_t i = 0; i < splits.size(); ++i) {
    for (std::size_t j = i + 1; j < splits.size(); ++j) {
      for (const auto& id : splits[i].binary_ids) {
        if (splits[j].binary_ids.count(id)) {
          throw Error(ErrorKind::kValidation, "binary " + id + " appears in both " +
                                                  std::string(to_string(splits[i].name)) + " and " +
                                                  std::string(to_string(splits[j].name)));
        }
      }
    }
  }
}

CorpusSplit mark_in_train(CorpusSplit test, const CorpusSplit& train) {
  std::unordered_set<std::uint64_t> seen;
  for (const auto& ex : train.examples) seen.insert(ex.fingerprint());
  for (auto& ex : test.examples) ex.in_train = seen.count(ex.fingerprint()) > 0;
  return test;
}

TypeLexicon build_type_lexicon(const std::vector<LabeledExample>& corpus, std::uint64_t min_count) {
  LexiconBuilder builder;
  for (const auto& ex : corpus) {
    for (const auto& g : ex.gold) builder.add(g.type);
  }
  return builder.finish(min_count);
}

// ---------------------------------------------------------------------------
// Whole-corpus build

BuiltCorpus build_corpus(const std::vector<FunctionRecord>& records,
                         const std::map<std::string, DwarfIndex>& indices,
                         const CorpusOptions& options) {
  validate_ratios(options.ratios);
  struct Pair {
    const FunctionRecord* debug = nullptr;
    const FunctionRecord* stripped = nullptr;
  };
  std::map<std::pair<std::string, std::uint64_t>, Pair> pairs;
  for (const auto& r : records) {
    auto& slot = pairs[{r.binary_id, r.entry}];
    auto& target = r.view == View::kDebug ? slot.debug : slot.stripped;
    if (target) {
      throw Error(ErrorKind::kValidation, "duplicate " + std::string(to_string(r.view)) +
                                              " record for " + r.function_id() + " in binary " +
                                              r.binary_id);
    }
    target = &r;
  }

  BuiltCorpus out;
  out.accounting.records_in = records.size();
  auto reject = [&](std::string_view reason, const std::string& what) {
    ++out.accounting.rejected[std::string(reason)];
    spdlog::debug("corpus: dropping {}: {}", what, reason);
  };

  std::vector<LabeledExample> kept;
  for (const auto& [key, pair] : pairs) {
    const FunctionRecord* input =
        options.mode == AlignmentMode::kAligned ? pair.stripped : pair.debug;
    if (!input) {
      reject("unpaired", key.first + ":" + format_entry(key.second));
      continue;
    }
    LabeledExample ex;
    if (input->status != DecompileStatus::kOk) {
      ex.input = *input;
      ex.gold.assign(input->variables.size(), GoldLabel{});
    } else {
      auto idx = indices.find(key.first);
      if (idx == indices.end()) {
        reject("no-debug-info", input->function_id());
        continue;
      }
      if (!pair.debug || pair.debug->status != DecompileStatus::kOk) {
        reject("unpaired", input->function_id());
        continue;
      }
      try {
        ex = options.mode == AlignmentMode::kAligned
                 ? label_aligned(*pair.stripped, *pair.debug, idx->second)
                 : label_debug_direct(*pair.debug, idx->second);
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::kAmbiguousAlignment) throw;
        spdlog::info("corpus: {}", e.what());
        reject("ambiguous-alignment", input->function_id());
        continue;
      }
    }
    if (auto why = filter_function(ex)) {
      reject(to_string(*why), input->function_id());
      continue;
    }
    kept.push_back(std::move(ex));
  }
  out.accounting.kept = kept.size();
  out.splits = split_corpus(std::move(kept), options.ratios, options.seed);
  out.splits[2] = mark_in_train(std::move(out.splits[2]), out.splits[0]);
  return out;
}

// ---------------------------------------------------------------------------
// Persistence

Json example_to_json(const LabeledExample& ex, const std::string& manifest_hash) {
  Json gold = Json::array();
  for (std::size_t i = 0; i < ex.gold.size(); ++i) {
    gold.push_back({{"name", ex.input.variables.at(i).decomp_name},
                    {"flag", std::string(to_string(ex.gold[i].flag))},
                    {"type", type_to_json(ex.gold[i].type)}});
  }
  Json j{{"input", record_to_json(ex.input)}, {"gold", std::move(gold)}, {"manifest", manifest_hash}};
  j["in_train"] = ex.in_train ? Json(*ex.in_train) : Json(nullptr);
  return j;
}

LabeledExample example_from_json(const Json& j, std::string_view context) {
  LabeledExample ex;
  ex.input = record_from_json(require(j, "input"), context);
  const Json& gold = require(j, "gold");
  if (!gold.is_array() || gold.size() != ex.input.variables.size()) {
    throw Error(ErrorKind::kValidation,
                std::string(context) + ": field 'gold' must hold one label per variable");
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    const Json& g = gold[i];
    if (require_string(g, "name") != ex.input.variables[i].decomp_name) {
      throw Error(ErrorKind::kValidation,
                  std::string(context) + ": gold[" + std::to_string(i) + "] names the wrong variable");
    }
    GoldLabel label;
    const auto flag = require_string(g, "flag");
    if (flag == "recovered") {
      label.flag = VariableFlag::kRecovered;
    } else if (flag == "disappear") {
      label.flag = VariableFlag::kDisappear;
    } else {
      throw Error(ErrorKind::kValidation, std::string(context) + ": unknown flag '" + flag + "'");
    }
    label.type = type_from_json(require(g, "type"), std::string(context) + ": gold.type");
    if ((label.flag == VariableFlag::kDisappear) != label.type.is(TypeKind::kDisappear)) {
      throw Error(ErrorKind::kValidation,
                  std::string(context) + ": gold[" + std::to_string(i) +
                      "] flag disagrees with its type");
    }
    ex.gold.push_back(std::move(label));
  }
  if (auto it = j.find("in_train"); it != j.end() && !it->is_null()) {
    ex.in_train = it->get<bool>();
  }
  return ex;
}

void write_split(const std::filesystem::path& path, const CorpusSplit& split,
                 const std::string& manifest_hash) {
  std::string out;
  for (const auto& ex : split.examples) {
    out += dump_line(example_to_json(ex, manifest_hash));
    out += '\n';
  }
  write_file(path, out);
}

CorpusSplit read_split(const std::filesystem::path& path, SplitName name,
                       const std::string* expected_manifest) {
  CorpusSplit split;
  split.name = name;
  for_each_line(path, [&](std::string_view line, std::size_t n) {
    const std::string ctx = path.string() + ":" + std::to_string(n);
    const Json j = parse_json(line, ctx);
    if (expected_manifest && require_string(j, "manifest") != *expected_manifest) {
      throw Error(ErrorKind::kValidation,
                  ctx + ": record belongs to another corpus build (manifest hash differs)");
    }
    auto ex = example_from_json(j, ctx);
    split.binary_ids.insert(ex.input.binary_id);
    split.examples.push_back(std::move(ex));
  });
  return split;
}

}  // namespace retype
