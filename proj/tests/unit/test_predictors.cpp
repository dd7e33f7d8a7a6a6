#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "retype/error.hpp"
#include "retype/predictors.hpp"
#include "synth.hpp"

using namespace retype;
namespace ts = testsupport;

namespace {

TypeDescriptor prim(const char* n, std::uint64_t s) { return TypeDescriptor::primitive(n, s); }

LabeledExample one_var(TypeDescriptor decomp, std::uint64_t size, TypeDescriptor gold) {
  LabeledExample ex;
  ex.input = ts::debug_record("b", "f", 0x10, {"x"});
  ex.input.variables[0].decomp_type = std::move(decomp);
  ex.input.variables[0].storage.size = size;
  ex.gold.push_back({gold.is(TypeKind::kDisappear) ? VariableFlag::kDisappear : VariableFlag::kRecovered, gold});
  return ex;
}

TypeLexicon lexicon_headed_by(const TypeDescriptor& t) {
  LexiconBuilder b;
  b.add(t, 10);
  b.add(prim("char", 1), 1);
  return b.finish(1);
}

const CorpusSplit& fixture_train() {
  static const CorpusSplit train = [] {
    CorpusOptions opt;
    opt.seed = ts::fixture_seed();
    return build_corpus(ts::fixture().records, ts::fixture().indices, opt).train();
  }();
  return train;
}

}  // namespace

TEST(Identity, Examples) {
  EXPECT_EQ(render_type(predict_identity(one_var(prim("int", 4), 4, prim("int", 4))).variables[0].type), "int");
  EXPECT_EQ(render_type(predict_identity(one_var(prim("undefined4", 4), 4, prim("int", 4))).variables[0].type),
            "undefined4");
  LabeledExample empty;
  empty.input = ts::debug_record("b", "f", 0x10, {});
  const auto p = predict_identity(empty);
  EXPECT_TRUE(p.variables.empty());
  EXPECT_EQ(p.predictor, kIdentityPredictor);
  EXPECT_EQ(p.function_id, empty.input.function_id());
}

TEST(MostFrequent, Examples) {
  auto ex = one_var(prim("int", 4), 4, prim("int", 4));
  EXPECT_EQ(render_type(predict_most_frequent(ex, lexicon_headed_by(TypeDescriptor::disappear())).variables[0].type),
            "<disappear>");
  EXPECT_EQ(render_type(predict_most_frequent(ex, lexicon_headed_by(prim("int", 4))).variables[0].type), "int");
}

TEST(SizeConditioned, BruteForceOnFixtureTrain) {
  const auto& train = fixture_train();
  const auto table = SizeConditionedTable::fit(train.examples);
  std::map<std::pair<std::string, std::uint64_t>, std::map<std::string, std::size_t>> brute;
  std::map<std::string, std::size_t> global;
  for (const auto& ex : train.examples) {
    for (std::size_t i = 0; i < ex.gold.size(); ++i) {
      const auto& v = ex.input.variables[i];
      const auto g = render_type(ex.gold[i].type);
      ++brute[{render_type(v.decomp_type), v.size()}][g];
      ++global[g];
    }
  }
  auto mode = [](const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t n = 0;
    for (const auto& [k, c] : counts)  // map order = lexicographic, so ties keep the smallest
      if (c > n) best = k, n = c;
    return best;
  };
  EXPECT_EQ(table.size(), brute.size());
  for (const auto& ex : train.examples) {
    for (const auto& v : ex.input.variables) {
      EXPECT_EQ(render_type(table.lookup(v)), mode(brute[{render_type(v.decomp_type), v.size()}]));
    }
  }
  EXPECT_EQ(render_type(table.fallback()), mode(global));

  VariableRecord unseen{"q", {StorageKind::kStack, -8, 3}, prim("weird3", 3)};
  EXPECT_EQ(render_type(table.lookup(unseen)), render_type(table.fallback()));
}

TEST(SizeConditioned, Undefined8MostlyCharPointer) {
  std::vector<LabeledExample> train;
  const auto cp = TypeDescriptor::pointer(prim("char", 1));
  for (int i = 0; i < 3; ++i) train.push_back(one_var(prim("undefined8", 8), 8, cp));
  train.push_back(one_var(prim("undefined8", 8), 8, prim("long", 8)));
  const auto table = SizeConditionedTable::fit(train);
  const auto ex = one_var(prim("undefined8", 8), 8, prim("long", 8));
  EXPECT_EQ(render_type(predict_size_conditioned(ex, table).variables[0].type), "char *");
  const auto again = SizeConditionedTable::from_json(table.to_json());
  EXPECT_EQ(render_type(predict_size_conditioned(ex, again).variables[0].type), "char *");
  EXPECT_EQ(again.to_json(), table.to_json());
}

TEST(Predictions, RoundTripGroupsByFunction) {
  const auto& train = fixture_train();
  std::vector<Prediction> preds;
  for (std::size_t i = 0; i < 10 && i < train.examples.size(); ++i) preds.push_back(predict_identity(train.examples[i]));
  const auto dir = ts::scratch_dir("pred_rw");
  write_predictions(dir / "p.jsonl", preds, "m1");
  const auto back = read_predictions(dir / "p.jsonl");
  ASSERT_EQ(back.size(), preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) {
    EXPECT_EQ(back[i].function_id, preds[i].function_id);
    EXPECT_EQ(back[i].binary_id, preds[i].binary_id);
    ASSERT_EQ(back[i].variables.size(), preds[i].variables.size());
    for (std::size_t v = 0; v < preds[i].variables.size(); ++v) {
      EXPECT_EQ(back[i].variables[v].variable, preds[i].variables[v].variable);
      EXPECT_TRUE(types_equal(back[i].variables[v].type, preds[i].variables[v].type));
    }
  }
}

TEST(Predictions, ConfidenceMustBeAProbability) {
  const auto dir = ts::scratch_dir("pred_bad");
  std::ofstream(dir / "p.jsonl")
      << R"({"binary":"b","function":"f@0x1","variable":"x","type":{"kind":"void"},"confidence":1.5,)"
      << R"("predictor":"identity","manifest":"m"})" << "\n";
  try {
    read_predictions(dir / "p.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kValidation);
    EXPECT_NE(std::string(e.what()).find("confidence"), std::string::npos);
  }
}
