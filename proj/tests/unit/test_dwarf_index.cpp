#include <gtest/gtest.h>

#include <fstream>

#include "oracles.hpp"
#include "retype/dwarf_index.hpp"
#include "retype/elf_file.hpp"
#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "synth.hpp"

using namespace retype;
namespace ts = testsupport;

namespace {

const DwarfIndex& simple() {
  static const DwarfIndex idx = index_binary(ts::fixture_dir() / "simple");
  return idx;
}

std::set<std::pair<std::string, std::string>> index_pairs(const DwarfIndex& idx) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& f : idx.functions())
    for (const auto& v : f.variables) out.insert({f.key.name, v.name});
  return out;
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInternal;
}

}  // namespace

TEST(DwarfIndex, ParameterAndLocal) {
  const auto* f = simple().find_function("f", std::nullopt);
  ASSERT_NE(f, nullptr);
  ASSERT_EQ(f->variables.size(), 2u);
  EXPECT_EQ(f->variables[0].name, "a");
  EXPECT_EQ(f->variables[0].kind, VariableKind::kParameter);
  EXPECT_EQ(render_type(f->variables[0].type), "int");
  EXPECT_EQ(f->variables[1].name, "b");
  EXPECT_EQ(f->variables[1].kind, VariableKind::kLocal);
  EXPECT_EQ(render_type(f->variables[1].type), "int");
}

TEST(DwarfIndex, StructOffsetsMatchReadelf) {
  auto t = lookup(simple(), "g", "p");
  ASSERT_TRUE(t.has_value());
  EXPECT_EQ(render_type(*t), "struct point { int x@0; int y@4; }");
}

TEST(DwarfIndex, LookupScopes) {
  EXPECT_EQ(render_type(lookup(simple(), "f", "b").value()), "int");
  EXPECT_FALSE(lookup(simple(), "f", "uVar1").has_value());
  EXPECT_FALSE(lookup(simple(), "g", "b").has_value());
  EXPECT_TRUE(simple().declared_names().count("p"));
}

TEST(DwarfIndex, StrippedCopyHasNoDebugInfo) {
  EXPECT_EQ(kind_of([] { index_binary(ts::fixture_dir() / "simple.stripped"); }), ErrorKind::kNoDebugInfo);
  EXPECT_EQ(kind_of([] { index_binary(ts::stripped_dir() / "bin00"); }), ErrorKind::kNoDebugInfo);
}

TEST(DwarfIndex, NonElfInputIsAParseError) {
  const auto dir = ts::scratch_dir("dwarf_nonelf");
  std::ofstream(dir / "x.txt") << "not an elf";
  EXPECT_EQ(kind_of([&] { index_binary(dir / "x.txt"); }), ErrorKind::kParse);
}

TEST(DwarfIndex, TruncatedDebugInfoIsMalformed) {
  auto elf = ElfFile::open(ts::fixture_dir() / "simple");
  const auto* sec = elf.find_section(".debug_info");
  ASSERT_NE(sec, nullptr);
  std::vector<std::byte> bytes(elf.bytes().begin(), elf.bytes().end());
  // Claim a unit length far past the section end.
  bytes[sec->offset] = std::byte{0xf0};
  bytes[sec->offset + 1] = std::byte{0xff};
  auto broken = ElfFile::from_bytes(std::move(bytes), "broken");
  const auto kind = kind_of([&] { index_elf(broken, "x"); });
  EXPECT_EQ(kind, ErrorKind::kMalformedDwarf);
}

TEST(DwarfIndex, NameSetsEqualReadelfOnEveryFixtureBinary) {
  ASSERT_FALSE(ts::readelf_path().empty());
  for (const auto& bin : ts::fixture().binaries) {
    const auto idx = index_binary(bin);
    EXPECT_EQ(index_pairs(idx), oracle::readelf_variables(ts::readelf_path(), bin)) << bin;
  }
}

TEST(DwarfIndex, TypedefsResolveAndCompilersDiffer) {
  const auto& fx = ts::fixture();
  bool saw_u32 = false;
  for (const auto& [id, idx] : fx.indices) {
    for (const auto& f : idx.functions()) {
      for (const auto& v : f.variables) {
        if (v.type.typedef_name() == std::optional<std::string>("u32")) {
          saw_u32 = true;
          EXPECT_EQ(render_type(v.type), "unsigned int");
        }
      }
    }
  }
  EXPECT_TRUE(saw_u32);
}

TEST(DwarfIndex, JsonRoundTrip) {
  const auto& idx = ts::fixture().indices.begin()->second;
  const auto back = DwarfIndex::from_json(idx.to_json());
  EXPECT_EQ(back.to_json(), idx.to_json());
  EXPECT_EQ(index_pairs(back), index_pairs(idx));
}

TEST(DwarfIndex, CacheReusesSidecar) {
  const auto dir = ts::scratch_dir("dwarf_cache");
  const auto bin = ts::bin_dir() / "bin03";
  const auto first = index_binary_cached(bin, dir);
  const auto sidecar = dir / (sha256_file(bin) + ".dwarfindex");
  ASSERT_TRUE(std::filesystem::exists(sidecar));
  const auto second = index_binary_cached(bin, dir);
  EXPECT_EQ(first.to_json(), second.to_json());
  EXPECT_EQ(first.binary_id(), sha256_file(bin));
}
