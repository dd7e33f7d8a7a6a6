#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/model/retyper.hpp"

namespace retype::model {

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 8;
  double learning_rate = 1e-3;
  double clip_norm = 1.0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t min_type_count = 1;
  std::uint64_t seed = 1;  // shuffling; parameters come from ModelConfig::seed
  bool check_invariants = false;

  Json to_json() const;
  static TrainOptions from_json(const Json& j);
};

struct TrainLogRow {
  std::size_t epoch = 0;
  double train_loss = 0;
  std::optional<double> valid_accuracy;  // nullopt with an empty valid split
};

struct TrainResult {
  Retyper model;
  std::vector<TrainLogRow> log;
  std::size_t best_epoch = 0;
};

/// Mean per-variable cross-entropy and exact-match accuracy over a split.
struct SplitScore {
  double loss = 0;
  double accuracy = 0;
  std::size_t variables = 0;
};
SplitScore score_split(const Retyper& model, const std::vector<EncodedExample>& examples);

/// Builds the lexicon and vocabulary from `train`, then runs minibatch Adam
/// with global-norm clipping.  Epoch 0 of the log is the initialization.
/// The returned model is the epoch with the best validation accuracy.
/// Throws Error(kEmptyCorpus) for an empty train split and
/// Error(kDivergence) when the loss stops being finite.
TrainResult train(const std::vector<LabeledExample>& train_split,
                  const std::vector<LabeledExample>& valid_split, const ModelConfig& config,
                  const TrainOptions& options);

std::string render_train_log(const std::vector<TrainLogRow>& log);

}  // namespace retype::model
