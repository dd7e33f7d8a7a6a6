#include <gtest/gtest.h>

#include <cctype>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/ingest.hpp"
#include "retype/pipeline.hpp"
#include "synth.hpp"

using namespace retype;
namespace ts = testsupport;

namespace {

const char* kMinimal =
    R"({"schema":1,"binary":"b1","function":"FUN_00101139","entry":"0x101139","view":"stripped",)"
    R"("status":"ok","code":"int FUN_00101139(int param_1)\n{\n  return param_1 + 1;\n}",)"
    R"("variables":[{"name":"param_1","storage":{"kind":"register","value":56,"size":4},)"
    R"("type":{"kind":"primitive","name":"int","size":4}}]})";

std::vector<std::string> spell(const TokenSequence& t) {
  std::vector<std::string> out;
  for (const auto& tok : t.tokens) out.push_back(tok.is_placeholder() ? "<" + tok.text + ">" : tok.text);
  return out;
}

VariableRecord var(const std::string& name) {
  return {name, {StorageKind::kStack, -8, 4}, TypeDescriptor::primitive("int", 4)};
}

Error error_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e;
  }
  return Error(ErrorKind::kInternal, "no error");
}

// Whole-word occurrences of `name` in `code`, scanning by hand.
std::size_t word_count(const std::string& code, const std::string& name) {
  auto ident = [](char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; };
  std::size_t n = 0;
  for (std::size_t i = 0; i + name.size() <= code.size(); ++i) {
    if (code.compare(i, name.size(), name) != 0) continue;
    const bool left = i == 0 || !ident(code[i - 1]);
    const bool right = i + name.size() == code.size() || !ident(code[i + name.size()]);
    if (left && right) ++n;
  }
  return n;
}

}  // namespace

TEST(Record, MinimalRecord) {
  const auto r = parse_export_record(kMinimal);
  ASSERT_EQ(r.variables.size(), 1u);
  EXPECT_EQ(r.variables[0].decomp_name, "param_1");
  EXPECT_EQ(r.variables[0].storage.kind, StorageKind::kRegister);
  EXPECT_EQ(r.entry, 0x101139u);
  EXPECT_EQ(r.function_id(), "FUN_00101139@0x101139");
  EXPECT_EQ(r.tokens.placeholder_count(), 2u);
}

TEST(Record, UnknownPlaceholderIsNamed) {
  auto j = Json::parse(kMinimal);
  j["tokens"] = Json::array({"return", Json{{"var", "v9"}}, ";"});
  const auto e = error_of([&] { record_from_json(j); });
  EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  EXPECT_NE(std::string(e.what()).find("v9"), std::string::npos);
}

TEST(Record, TimeoutWithEmptyTokensIsAccepted) {
  auto j = Json::parse(kMinimal);
  j["status"] = "timeout";
  j["code"] = "";
  j["tokens"] = Json::array();
  const auto r = record_from_json(j);
  EXPECT_EQ(r.status, DecompileStatus::kTimeout);
  EXPECT_TRUE(r.tokens.empty());
}

TEST(Record, SyntaxErrorCarriesByteOffset) {
  const auto e = error_of([] { parse_export_record(R"({"schema":1, "binary": })"); });
  EXPECT_EQ(e.kind(), ErrorKind::kParse);
  EXPECT_NE(std::string(e.what()).find("byte"), std::string::npos);
}

TEST(Record, SchemaViolationsNameTheField) {
  for (const char* field : {"binary", "function", "entry", "view", "status", "variables", "code"}) {
    auto j = Json::parse(kMinimal);
    j.erase(field);
    const auto e = error_of([&] { record_from_json(j); });
    EXPECT_EQ(e.kind(), ErrorKind::kValidation) << field;
    EXPECT_NE(std::string(e.what()).find(field), std::string::npos) << e.what();
  }
  auto j = Json::parse(kMinimal);
  j["variables"][0]["type"]["kind"] = "quux";
  EXPECT_EQ(error_of([&] { record_from_json(j); }).kind(), ErrorKind::kValidation);
  j = Json::parse(kMinimal);
  j["schema"] = 2;
  EXPECT_EQ(error_of([&] { record_from_json(j); }).kind(), ErrorKind::kValidation);
}

TEST(Tokenizer, Examples) {
  std::vector<VariableRecord> vars = {var("a"), var("b")};
  EXPECT_EQ(spell(canonicalize_tokens("b = a + 1;", vars)),
            (std::vector<std::string>{"<b>", "=", "<a>", "+", "1", ";"}));
  const auto t = canonicalize_tokens("return x;", {});
  EXPECT_EQ(spell(t), (std::vector<std::string>{"return", "x", ";"}));
  EXPECT_EQ(t.placeholder_count(), 0u);
}

TEST(Tokenizer, LexesOperatorsLiteralsAndComments) {
  EXPECT_EQ(lex_c("x->y <<= 0x1f; /* c */ s = \"a b\"; // t\n c = 'q';"),
            (std::vector<std::string>{"x", "->", "y", "<<=", "0x1f", ";", "s", "=", "\"a b\"", ";", "c",
                                      "=", "'q'", ";"}));
  EXPECT_NO_THROW(lex_c("\"unterminated"));
}

TEST(Tokenizer, PlaceholderCountsMatchWordScanOnFixtureFunctions) {
  const auto& records = ts::fixture().records;
  std::mt19937_64 rng(4);
  std::size_t checked = 0;
  for (std::size_t k = 0; k < 500; ++k) {
    const auto& r = records[rng() % records.size()];
    if (r.status != DecompileStatus::kOk) continue;
    const auto seq = canonicalize_tokens(r.raw_code, r.variables);
    for (std::size_t v = 0; v < r.variables.size(); ++v) {
      EXPECT_EQ(seq.positions_of(v).size(), word_count(r.raw_code, r.variables[v].decomp_name));
    }
    ++checked;
  }
  EXPECT_GT(checked, 400u);
}

TEST(Fingerprint, Examples) {
  auto f1 = canonicalize_tokens("x = y + 1;", std::vector<VariableRecord>{var("x"), var("y")});
  auto f2 = canonicalize_tokens("a = b + 1;", std::vector<VariableRecord>{var("a"), var("b")});
  auto f3 = canonicalize_tokens("a = b + 2;", std::vector<VariableRecord>{var("a"), var("b")});
  EXPECT_EQ(body_fingerprint(f1), body_fingerprint(f2));
  EXPECT_NE(body_fingerprint(f2), body_fingerprint(f3));
  EXPECT_EQ(body_fingerprint(TokenSequence{}), 0xcbf29ce484222325ULL);
}

TEST(Fingerprint, OwnNameIsNormalized) {
  auto a = canonicalize_tokens("int FUN_00001139(void) { return 1; }", {});
  auto b = canonicalize_tokens("int FUN_00001200(void) { return 1; }", {});
  EXPECT_NE(body_fingerprint(a), body_fingerprint(b));
  EXPECT_EQ(body_fingerprint(a, "FUN_00001139"), body_fingerprint(b, "FUN_00001200"));
}

TEST(Fingerprint, MatchesOracleOnFixture) {
  for (const auto& r : ts::fixture().records) {
    EXPECT_EQ(body_fingerprint(r.tokens, r.function), oracle::fingerprint(r)) << r.function_id();
  }
}

TEST(Record, FixtureRecordsRoundTrip) {
  for (const auto& r : ts::fixture().records) {
    const auto line = serialize_record(r);
    const auto back = parse_export_record(line);
    EXPECT_EQ(serialize_record(back), line);
    EXPECT_EQ(record_to_json(back), record_to_json(r));
  }
}

TEST(Ingest, WriteReadRecords) {
  const auto dir = ts::scratch_dir("ingest_rw");
  const auto& recs = ts::fixture().records;
  write_records(dir / "records.jsonl", recs);
  const auto back = read_records(dir / "records.jsonl");
  ASSERT_EQ(back.size(), recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) EXPECT_EQ(serialize_record(back[i]), serialize_record(recs[i]));
}

TEST(Ingest, BadLineNamesFileAndLine) {
  const auto dir = ts::scratch_dir("ingest_bad");
  {
    std::ofstream out(dir / "x.jsonl");
    out << kMinimal << "\n" << R"({"schema":1})" << "\n";
  }
  const auto e = error_of([&] { ingest_exports({dir / "x.jsonl"}, 1); });
  EXPECT_EQ(e.kind(), ErrorKind::kValidation);
  EXPECT_NE(std::string(e.what()).find("x.jsonl"), std::string::npos);
  EXPECT_NE(std::string(e.what()).find(":2"), std::string::npos) << e.what();
}

// Export contract for the recorded fixture exports.
TEST(ExportContract, ViewsAndStatuses) {
  const auto& recs = ts::fixture().records;
  std::size_t timeouts = 0, debug_dwarf_names = 0;
  for (const auto& r : recs) {
    timeouts += r.status == DecompileStatus::kTimeout;
    for (const auto& v : r.variables) {
      const auto& n = v.decomp_name;
      if (r.view == View::kStripped) {
        const bool generated = n.starts_with("param_") || n.starts_with("local_") || n.find("Var") != std::string::npos;
        EXPECT_TRUE(generated) << n;
      } else if (lookup(ts::fixture().indices.at(r.binary_id), r.function, n, r.entry)) {
        ++debug_dwarf_names;
      }
    }
  }
  EXPECT_GE(timeouts, 2u);  // both views of the timed-out function
  EXPECT_GT(debug_dwarf_names, 100u);
}
