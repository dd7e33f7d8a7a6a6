#include <gtest/gtest.h>

#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/model/checkpoint.hpp"
#include "synth.hpp"

using namespace retype;
using namespace retype::model;
namespace ts = testsupport;

namespace {

Retyper toy_model() {
  LexiconBuilder b;
  b.add(TypeDescriptor::primitive("int", 4), 3);
  b.add(TypeDescriptor::pointer(TypeDescriptor::primitive("char", 1)), 2);
  LabeledExample src;
  for (const char* w : {"return", ";", "(", ")"}) src.input.tokens.tokens.push_back({w, {}});
  ModelConfig c;
  c.d_model = 8;
  c.heads = 2;
  c.layers = 1;
  c.ff = 8;
  c.max_len = 32;
  c.seed = 9;
  return Retyper(c, b.finish(1), TokenVocab::build({src}));
}

ErrorKind kind_of(std::string_view bytes) {
  try {
    parse_checkpoint(bytes, "ck");
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::kInternal;
}

void refresh_checksum(std::string& bytes) {
  bytes.resize(bytes.size() - 8);
  std::uint64_t h = fnv1a64(bytes);
  for (int i = 0; i < 8; ++i) bytes += static_cast<char>((h >> (8 * i)) & 0xff);
}

}  // namespace

TEST(Checkpoint, RoundTrip) {
  const auto m = toy_model();
  const auto dir = ts::scratch_dir("ckpt");
  save_checkpoint(dir / "m.ckpt", m, "manifest-1");
  const auto back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back.manifest_hash, "manifest-1");
  EXPECT_EQ(back.model.params().checksum(), m.params().checksum());
  EXPECT_EQ(back.model.lexicon().digest(), m.lexicon().digest());
  EXPECT_EQ(back.model.vocab().to_json(), m.vocab().to_json());
  EXPECT_EQ(serialize_checkpoint(back.model, "manifest-1"), serialize_checkpoint(m, "manifest-1"));
}

TEST(Checkpoint, Corruption) {
  const auto good = serialize_checkpoint(toy_model(), "m");
  auto magic = good;
  magic[0] = 'X';
  EXPECT_EQ(kind_of(magic), ErrorKind::kValidation);

  auto flipped = good;
  flipped[flipped.size() / 2] ^= 0x01;
  EXPECT_EQ(kind_of(flipped), ErrorKind::kValidation);

  auto version = good;
  version[8] = 2;
  refresh_checksum(version);
  EXPECT_EQ(kind_of(version), ErrorKind::kUnsupported);

  EXPECT_EQ(kind_of(good.substr(0, 10)), ErrorKind::kValidation);
  EXPECT_EQ(kind_of(""), ErrorKind::kValidation);
}

TEST(Checkpoint, MissingFile) {
  EXPECT_THROW(load_checkpoint(ts::scratch_dir("ckpt_missing") / "none.ckpt"), Error);
}
