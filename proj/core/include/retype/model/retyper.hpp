#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/lexicon.hpp"
#include "retype/model/tensor.hpp"
#include "retype/model/vocab.hpp"
#include "retype/predictors.hpp"

namespace retype::model {

struct ModelConfig {
  std::size_t d_model = 64;
  std::size_t heads = 4;
  std::size_t layers = 2;
  std::size_t ff = 128;
  std::size_t vocab_size = 0;    // filled from the token vocabulary
  std::size_t lexicon_size = 0;  // filled from the type lexicon
  std::size_t max_len = 256;
  double mask_penalty = 0.0;     // lambda
  bool use_layout = true;
  std::uint64_t seed = 1;

  /// Throws Error(kValidation).
  void validate() const;
  Json to_json() const;
  static ModelConfig from_json(const Json& j);
};

inline constexpr std::size_t kStorageKinds = 4;
inline constexpr std::size_t kSizeBuckets = 8;
inline constexpr std::size_t kOffsetBuckets = 16;

/// Smallest of {1,2,4,8,16,32,64,inf} that holds `size`, as an index 0..7.
std::size_t size_bucket(std::uint64_t size);
/// 0 for non-stack storage; stack offsets bucket by log2 of |offset|.
std::size_t offset_bucket(const StorageLocation& loc);

/// softmax(logits - penalty * mask), mask[i] in {0,1}.
std::vector<double> masked_softmax(const std::vector<double>& logits,
                                   const std::vector<std::uint8_t>& mask, double penalty);

struct LayerIndex {
  std::size_t wq, bq, wk, bk, wv, bv, wo, bo;
  std::size_t ln1_g, ln1_b;
  std::size_t w1, b1, w2, b2;
  std::size_t ln2_g, ln2_b;
};

/// Every trainable tensor, in a fixed order that checkpoints rely on.
class Parameters {
 public:
  Parameters() = default;
  explicit Parameters(const ModelConfig& c);  // shapes only, all zero

  std::vector<Tensor> tensors;
  std::size_t tok_emb = 0;
  std::vector<LayerIndex> layers;
  std::size_t kind_emb = 0, size_emb = 0, off_emb = 0, wl = 0, bl = 0;
  std::size_t wh = 0, bh = 0, wc = 0, bc = 0;

  Mat& operator[](std::size_t i) { return tensors[i].m; }
  const Mat& operator[](std::size_t i) const { return tensors[i].m; }

  void init_random(std::uint64_t seed);
  void zero();
  std::size_t scalar_count() const;
  double global_norm() const;
  bool all_finite() const;
  std::uint64_t checksum() const;
  Json norms() const;

 private:
  std::size_t add(std::string name, std::size_t rows, std::size_t cols);
};

/// Model-facing view of one example.
struct EncodedVariable {
  std::vector<std::size_t> positions;
  std::size_t kind = 0;
  std::size_t size_bucket = 0;
  std::size_t offset_bucket = 0;
  std::vector<std::uint8_t> mask;  // 1 = size disagrees with the lexicon entry
  std::size_t gold = 0;            // lexicon rank
  bool gold_known = false;         // gold is in the lexicon
};

struct EncodedExample {
  std::vector<std::size_t> ids;
  std::vector<EncodedVariable> vars;
};

class Retyper {
 public:
  /// Fills vocab_size and lexicon_size into `config` and draws parameters
  /// from config.seed.
  Retyper(ModelConfig config, TypeLexicon lexicon, TokenVocab vocab);
  Retyper(ModelConfig config, TypeLexicon lexicon, TokenVocab vocab, Parameters params);

  const ModelConfig& config() const noexcept { return config_; }
  const TypeLexicon& lexicon() const noexcept { return lexicon_; }
  const TokenVocab& vocab() const noexcept { return vocab_; }
  Parameters& params() noexcept { return params_; }
  const Parameters& params() const noexcept { return params_; }

  /// Assert attention/softmax normalization and shapes on every forward pass.
  void set_invariant_checks(bool on) noexcept { check_ = on; }

  EncodedExample encode(const LabeledExample& ex) const;

  /// Sum of per-variable cross-entropy.  When `grad` is non-null the
  /// gradient of that sum is added into it.  When `probs` is non-null it
  /// receives one distribution per variable.
  double run(const EncodedExample& ex, Parameters* grad,
             std::vector<std::vector<double>>* probs = nullptr) const;

  /// Encoder output (tokens x d) only.
  Mat encode_code(const std::vector<std::size_t>& ids) const;

  Prediction predict(const LabeledExample& ex) const;

 private:
  ModelConfig config_;
  TypeLexicon lexicon_;
  TokenVocab vocab_;
  Parameters params_;
  std::vector<std::uint64_t> type_sizes_;
  Mat positions_;
  bool check_ = false;
};

struct GradCheckFailure {
  std::string tensor;
  std::size_t index = 0;
  double analytic = 0;
  double numeric = 0;
  double rel_error = 0;
};

struct GradCheckReport {
  std::size_t checked = 0;
  double max_rel_error = 0;
  std::vector<GradCheckFailure> failures;

  bool ok() const noexcept { return failures.empty(); }
};

/// Central differences (step 1e-4) against the analytic gradient on a
/// synthetic example of at most 8 tokens.  Requires a tiny config.
GradCheckReport gradient_check(const ModelConfig& config, double tolerance,
                               std::size_t samples = 200);

}  // namespace retype::model
