#include "retype/predictors.hpp"

#include "retype/error.hpp"
#include "retype/type_json.hpp"

namespace retype {
namespace {

Prediction skeleton(const LabeledExample& ex, std::string_view predictor) {
  Prediction p;
  p.binary_id = ex.input.binary_id;
  p.function_id = ex.input.function_id();
  p.predictor = predictor;
  p.variables.reserve(ex.input.variables.size());
  return p;
}

}  // namespace

Prediction predict_identity(const LabeledExample& ex) {
  auto p = skeleton(ex, kIdentityPredictor);
  for (const auto& v : ex.input.variables) p.variables.push_back({v.decomp_name, v.decomp_type, 1.0});
  return p;
}

Prediction predict_most_frequent(const LabeledExample& ex, const TypeLexicon& lexicon) {
  if (lexicon.empty()) throw Error(ErrorKind::kValidation, "most-frequent baseline needs a lexicon");
  auto p = skeleton(ex, kMostFrequentPredictor);
  for (const auto& v : ex.input.variables) p.variables.push_back({v.decomp_name, lexicon.at(0).type, 1.0});
  return p;
}

SizeConditionedTable SizeConditionedTable::fit(const std::vector<LabeledExample>& train) {
  struct Votes {
    std::map<std::string, std::pair<std::uint64_t, TypeDescriptor>> by_text;
  };
  std::map<Key, Votes> votes;
  Votes global;
  for (const auto& ex : train) {
    for (std::size_t i = 0; i < ex.gold.size(); ++i) {
      const auto& v = ex.input.variables[i];
      const auto& gold = ex.gold[i].type;
      const auto text = render_type(gold);
      for (Votes* target : {&votes[{render_type(v.decomp_type), v.size()}], &global}) {
        auto [it, fresh] = target->by_text.try_emplace(text, 0, gold);
        ++it->second.first;
      }
    }
  }
  auto winner = [](const Votes& v) {
    const std::pair<std::uint64_t, TypeDescriptor>* best = nullptr;
    for (const auto& [text, slot] : v.by_text) {
      if (!best || slot.first > best->first) best = &slot;  // map order breaks ties
    }
    return best->second;
  };
  SizeConditionedTable t;
  for (const auto& [key, v] : votes) t.table_.emplace(key, winner(v));
  if (!global.by_text.empty()) t.fallback_ = winner(global);
  return t;
}

const TypeDescriptor& SizeConditionedTable::lookup(const VariableRecord& v) const {
  auto it = table_.find({render_type(v.decomp_type), v.size()});
  return it == table_.end() ? fallback_ : it->second;
}

Json SizeConditionedTable::to_json() const {
  Json entries = Json::array();
  for (const auto& [key, type] : table_) {
    entries.push_back({{"decomp", key.first}, {"size", key.second}, {"type", type_to_json(type)}});
  }
  return Json{{"fallback", type_to_json(fallback_)}, {"entries", std::move(entries)}};
}

SizeConditionedTable SizeConditionedTable::from_json(const Json& j) {
  SizeConditionedTable t;
  t.fallback_ = type_from_json(require(j, "fallback"), "size table fallback");
  const Json& entries = require(j, "entries");
  if (!entries.is_array()) throw Error(ErrorKind::kValidation, "field 'entries' must be an array");
  for (const auto& e : entries) {
    t.table_.emplace(Key{require_string(e, "decomp"), require_uint(e, "size")},
                     type_from_json(require(e, "type"), "size table entry"));
  }
  return t;
}

Prediction predict_size_conditioned(const LabeledExample& ex, const SizeConditionedTable& table) {
  auto p = skeleton(ex, kSizeConditionedPredictor);
  for (const auto& v : ex.input.variables) p.variables.push_back({v.decomp_name, table.lookup(v), 1.0});
  return p;
}

void write_predictions(const std::filesystem::path& path, const std::vector<Prediction>& preds,
                       const std::string& manifest_hash) {
  std::string out;
  for (const auto& p : preds) {
    for (const auto& v : p.variables) {
      out += dump_line(Json{{"binary", p.binary_id},
                            {"function", p.function_id},
                            {"variable", v.variable},
                            {"type", type_to_json(v.type)},
                            {"confidence", v.confidence},
                            {"predictor", p.predictor},
                            {"manifest", manifest_hash}});
      out += '\n';
    }
  }
  write_file(path, out);
}

std::vector<Prediction> read_predictions(const std::filesystem::path& path) {
  std::vector<Prediction> out;
  std::map<std::pair<std::string, std::string>, std::size_t> where;
  for_each_line(path, [&](std::string_view line, std::size_t n) {
    const std::string ctx = path.string() + ":" + std::to_string(n);
    const Json j = parse_json(line, ctx);
    std::string binary;
    std::string function;
    VariablePrediction v;
    std::string predictor;
    try {
      binary = require_string(j, "binary");
      function = require_string(j, "function");
      v.variable = require_string(j, "variable");
      predictor = require_string(j, "predictor");
      const Json& c = require(j, "confidence");
      if (!c.is_number()) throw Error(ErrorKind::kValidation, "field 'confidence' must be a number");
      v.confidence = c.get<double>();
    } catch (const Error& e) {
      throw Error(e.kind(), ctx + ": " + e.what());
    }
    if (!(v.confidence >= 0.0 && v.confidence <= 1.0)) {
      throw Error(ErrorKind::kValidation, ctx + ": field 'confidence' outside [0,1]");
    }
    v.type = type_from_json(require(j, "type"), ctx + ": type");
    auto [it, fresh] = where.try_emplace({binary, function}, out.size());
    if (fresh) out.push_back({binary, function, predictor, {}});
    auto& p = out[it->second];
    if (p.predictor != predictor) {
      throw Error(ErrorKind::kValidation, ctx + ": predictor '" + predictor + "' mixed with '" +
                                              p.predictor + "' for " + function);
    }
    p.variables.push_back(std::move(v));
  });
  return out;
}

}  // namespace retype
