#include "retype/model/checkpoint.hpp"

#include <cstring>

#include "retype/error.hpp"
#include "retype/hash.hpp"

namespace retype::model {
namespace {

constexpr std::string_view kMagic = "RETYPECK";

template <typename T>
void put(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out += static_cast<char>((value >> (8 * i)) & 0xff);
}

template <typename T>
T get(std::string_view bytes, std::size_t& pos, std::string_view context) {
  if (bytes.size() - pos < sizeof(T) || pos > bytes.size()) {
    throw Error(ErrorKind::kValidation, std::string(context) + ": checkpoint truncated");
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<T>(static_cast<unsigned char>(bytes[pos + i])) << (8 * i);
  }
  pos += sizeof(T);
  return v;
}

}  // namespace

std::string serialize_checkpoint(const Retyper& model, const std::string& manifest_hash) {
  Json shapes = Json::array();
  for (const auto& t : model.params().tensors) {
    shapes.push_back({{"name", t.name}, {"rows", t.m.rows}, {"cols", t.m.cols}});
  }
  const Json header{{"config", model.config().to_json()},
                    {"lexicon", model.lexicon().to_json()},
                    {"lexicon_digest", model.lexicon().digest()},
                    {"vocab", model.vocab().to_json()},
                    {"manifest", manifest_hash},
                    {"tensors", std::move(shapes)}};
  const std::string text = header.dump();
  std::string out(kMagic);
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : model.params().tensors) {
    for (double x : t.m.v) {
      std::uint64_t bits;
      std::memcpy(&bits, &x, sizeof bits);
      put(out, bits);
    }
  }
  put<std::uint64_t>(out, fnv1a64(out));
  return out;
}

void save_checkpoint(const std::filesystem::path& path, const Retyper& model,
                     const std::string& manifest_hash) {
  write_file(path, serialize_checkpoint(model, manifest_hash));
}

LoadedCheckpoint parse_checkpoint(std::string_view bytes, std::string_view context) {
  const std::string ctx(context);
  auto bad = [&](const std::string& why) { throw Error(ErrorKind::kValidation, ctx + ": " + why); };
  if (bytes.size() < kMagic.size() + 4 + 8 + 8 || bytes.substr(0, kMagic.size()) != kMagic) {
    bad("not a checkpoint file");
  }
  std::size_t tail = bytes.size() - 8;
  const auto stored = get<std::uint64_t>(bytes, tail, context);
  if (stored != fnv1a64(bytes.substr(0, bytes.size() - 8))) bad("checkpoint checksum mismatch");
  const std::string_view body = bytes.substr(0, bytes.size() - 8);

  std::size_t pos = kMagic.size();
  const auto version = get<std::uint32_t>(body, pos, context);
  if (version != kCheckpointVersion) {
    throw Error(ErrorKind::kUnsupported, ctx + ": checkpoint version " + std::to_string(version) +
                                             " (expected " + std::to_string(kCheckpointVersion) + ")");
  }
  const auto len = get<std::uint64_t>(body, pos, context);
  if (len > body.size() - pos) bad("checkpoint header truncated");
  const Json header = parse_json(body.substr(pos, len), ctx + " header");
  pos += len;

  ModelConfig config = ModelConfig::from_json(require(header, "config"));
  TypeLexicon lexicon = TypeLexicon::from_json(require(header, "lexicon"));
  if (lexicon.digest() != require_string(header, "lexicon_digest")) bad("lexicon digest mismatch");
  TokenVocab vocab = TokenVocab::from_json(require(header, "vocab"));

  Parameters params(config);
  const Json& shapes = require(header, "tensors");
  if (!shapes.is_array() || shapes.size() != params.tensors.size()) bad("tensor directory mismatch");
  for (std::size_t i = 0; i < params.tensors.size(); ++i) {
    auto& t = params.tensors[i];
    if (require_string(shapes[i], "name") != t.name || require_uint(shapes[i], "rows") != t.m.rows ||
        require_uint(shapes[i], "cols") != t.m.cols) {
      bad("tensor '" + t.name + "' does not match the config");
    }
    for (double& x : t.m.v) {
      const auto bits = get<std::uint64_t>(body, pos, context);
      std::memcpy(&x, &bits, sizeof x);
    }
  }
  if (pos != body.size()) bad("trailing bytes after tensors");
  if (!params.all_finite()) bad("non-finite parameter");
  return {Retyper(std::move(config), std::move(lexicon), std::move(vocab), std::move(params)),
          require_string(header, "manifest")};
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return parse_checkpoint(read_file(path), path.string());
}

}  // namespace retype::model
