#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "retype/corpus.hpp"
#include "retype/dwarf_index.hpp"
#include "retype/eval.hpp"
#include "retype/manifest.hpp"
#include "retype/model/retyper.hpp"
#include "retype/model/train.hpp"
#include "retype/predictors.hpp"
#include "retype/stats.hpp"

namespace retype {

namespace fs = std::filesystem;

// ---- stage: index-dwarf -------------------------------------------------------

struct IndexedBinaries {
  std::map<std::string, DwarfIndex> indices;  // by binary id
  std::vector<std::string> skipped;           // "path: reason" for binaries without DWARF
};

/// Indexes each binary; binaries without debug info are skipped and listed.
IndexedBinaries index_binaries(const std::vector<fs::path>& binaries,
                               const std::optional<fs::path>& cache_dir, std::size_t jobs);
void write_index(const fs::path& dir, const DwarfIndex& index);
std::map<std::string, DwarfIndex> read_index_dir(const fs::path& dir);

// ---- stage: ingest --------------------------------------------------------------

/// Parses export files in order; records keep file then line order.
std::vector<FunctionRecord> ingest_exports(const std::vector<fs::path>& files, std::size_t jobs);
void write_records(const fs::path& path, const std::vector<FunctionRecord>& records);
std::vector<FunctionRecord> read_records(const fs::path& path);

// ---- stage: build-corpus --------------------------------------------------------

struct CorpusOnDisk {
  std::array<CorpusSplit, 3> splits;
  TypeLexicon lexicon;
  Json manifest;
  std::string manifest_hash;

  const CorpusSplit& train() const { return splits[0]; }
  const CorpusSplit& valid() const { return splits[1]; }
  const CorpusSplit& test() const { return splits[2]; }
  const CorpusSplit& split(SplitName n) const { return splits[static_cast<std::size_t>(n)]; }
};

/// Writes train/valid/test.jsonl, lexicon.json, stats.txt, stats.csv and
/// manifest.json into out_dir.
CorpusOnDisk write_corpus(const BuiltCorpus& corpus, const CorpusOptions& options,
                          std::uint64_t min_type_count, const std::map<std::string, std::string>& inputs,
                          const fs::path& out_dir);
CorpusOnDisk read_corpus(const fs::path& dir);
SplitName split_from(std::string_view text);

/// Train-layout table, then test-layout table; and the CSV.
std::string render_corpus_stats(const CorpusOnDisk& corpus);
std::string render_corpus_stats_csv(const CorpusOnDisk& corpus);

// ---- stage: baselines / predict ---------------------------------------------------

struct Baselines {
  TypeLexicon lexicon;
  SizeConditionedTable size_table;
};
Baselines fit_baselines(const CorpusOnDisk& corpus);
Json baselines_to_json(const Baselines& b);
Baselines baselines_from_json(const Json& j);

/// Runs one named predictor over a split.  `model` is required for the
/// retyper, `baselines` for most-frequent and size-conditioned.
std::vector<Prediction> predict_split(std::string_view predictor, const CorpusSplit& split,
                                      const Baselines* baselines, const model::Retyper* model,
                                      std::size_t jobs);

// ---- pipeline ---------------------------------------------------------------------

struct PipelineOptions {
  CorpusOptions corpus;
  std::uint64_t min_type_count = 1;
  model::ModelConfig model;
  model::TrainOptions train;
  std::size_t jobs = 1;
  std::optional<fs::path> cache_dir;
};

struct PipelineResult {
  std::map<std::string, AccuracyReport> reports;  // by predictor
  std::string corpus_manifest_hash;
  std::size_t binaries_indexed = 0;
  std::size_t binaries_skipped = 0;
};

/// index-dwarf, ingest, build-corpus, stats, fit-baselines, train, predict
/// (all predictors), evaluate and report, all written under out_dir.
PipelineResult run_pipeline(const fs::path& binaries_dir, const fs::path& exports_dir,
                            const fs::path& out_dir, const PipelineOptions& options);

/// Regular files directly inside dir, sorted by name, optionally by suffix.
std::vector<fs::path> list_files(const fs::path& dir, std::string_view suffix = "");

}  // namespace retype
