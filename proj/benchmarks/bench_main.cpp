#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "retype/dwarf_index.hpp"
#include "retype/ingest.hpp"
#include "retype/model/retyper.hpp"
#include "retype/typelib.hpp"

using namespace retype;

namespace {

std::string synthetic_code(std::size_t lines) {
  std::string code = "int FUN_00101139(long param_1,int param_2)\n\n{\n  int local_14;\n  undefined8 uVar1;\n\n";
  for (std::size_t i = 0; i < lines; ++i) {
    code += "  local_14 = *(int *)(param_1 + 0x" + std::to_string(i % 10) + ") + param_2;\n";
    code += "  if (local_14 < 0x20) { uVar1 = FUN_00101020(local_14, \"fmt %d\"); }  // note\n";
  }
  return code + "  return local_14;\n}\n";
}

std::vector<VariableRecord> synthetic_vars() {
  const auto i32 = TypeDescriptor::primitive("int", 4);
  return {{"param_1", {StorageKind::kRegister, 0x38, 8}, TypeDescriptor::primitive("long", 8)},
          {"param_2", {StorageKind::kRegister, 0x30, 4}, i32},
          {"local_14", {StorageKind::kStack, -0x14, 4}, i32},
          {"uVar1", {StorageKind::kUnique, 0x100, 8}, TypeDescriptor::primitive("undefined8", 8)}};
}

void BM_Tokenize(benchmark::State& state) {
  const auto code = synthetic_code(static_cast<std::size_t>(state.range(0)));
  const auto vars = synthetic_vars();
  for (auto _ : state) benchmark::DoNotOptimize(canonicalize_tokens(code, vars));
  state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * code.size()));
}
BENCHMARK(BM_Tokenize)->Arg(10)->Arg(100)->Arg(1000);

TypeDescriptor nested_struct(int depth) {
  const auto i32 = TypeDescriptor::primitive("int", 4);
  if (depth == 0) return TypeDescriptor::structure("leaf", {{"a", i32, 0, 4}, {"b", i32, 4, 4}}, 8);
  const auto inner = nested_struct(depth - 1);
  const auto sz = size_of(inner);
  return TypeDescriptor::structure(
      "s" + std::to_string(depth),
      {{"head", inner, 0, sz}, {"next", TypeDescriptor::pointer(inner), sz, 8},
       {"tag", TypeDescriptor::array(TypeDescriptor::primitive("char", 1), 16), sz + 8, 16}},
      sz + 24);
}

void BM_RenderType(benchmark::State& state) {
  const auto t = nested_struct(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(render_type(t));
}
BENCHMARK(BM_RenderType)->Arg(1)->Arg(4)->Arg(8);

void BM_DwarfIndex(benchmark::State& state) {
  const std::filesystem::path elf = RETYPE_BENCH_ELF;
  if (!std::filesystem::exists(elf)) {
    state.SkipWithError("fixture binary not built");
    return;
  }
  for (auto _ : state) benchmark::DoNotOptimize(index_binary(elf));
}
BENCHMARK(BM_DwarfIndex)->Unit(benchmark::kMicrosecond);

void BM_Forward(benchmark::State& state) {
  LexiconBuilder lb;
  for (int i = 0; i < 64; ++i) lb.add(TypeDescriptor::primitive("t" + std::to_string(i), 1u << (i % 4)), 64 - i);
  LabeledExample ex;
  ex.input.binary_id = "bench";
  ex.input.function = "FUN_00101139";
  ex.input.raw_code = synthetic_code(8);
  ex.input.variables = synthetic_vars();
  ex.input.tokens = canonicalize_tokens(ex.input.raw_code, ex.input.variables);
  for (std::size_t i = 0; i < ex.input.variables.size(); ++i)
    ex.gold.push_back({VariableFlag::kRecovered, TypeDescriptor::primitive("t0", 1)});
  model::ModelConfig c;
  c.d_model = static_cast<std::size_t>(state.range(0));
  c.heads = 4;
  c.layers = 2;
  c.ff = 2 * c.d_model;
  c.max_len = 256;
  model::Retyper m(c, lb.finish(1), model::TokenVocab::build({ex}));
  const auto enc = m.encode(ex);
  const bool backward = state.range(1) != 0;
  model::Parameters grad(m.config());
  for (auto _ : state) benchmark::DoNotOptimize(m.run(enc, backward ? &grad : nullptr));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * enc.ids.size()));
}
BENCHMARK(BM_Forward)->Args({32, 0})->Args({64, 0})->Args({64, 1})->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
