#include "retype/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <fstream>

#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/model/checkpoint.hpp"
#include "retype/parallel.hpp"

namespace retype {

std::vector<fs::path> list_files(const fs::path& dir, std::string_view suffix) {
  if (!fs::is_directory(dir)) throw Error(ErrorKind::kIo, "not a directory: " + dir.string());
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    if (!suffix.empty() && !e.path().string().ends_with(suffix)) continue;
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

namespace {

bool looks_like_elf(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  char magic[4] = {};
  in.read(magic, 4);
  return in.gcount() == 4 && magic[0] == 0x7f && magic[1] == 'E' && magic[2] == 'L' && magic[3] == 'F';
}

}  // namespace

// ---- index-dwarf ------------------------------------------------------------------

IndexedBinaries index_binaries(const std::vector<fs::path>& binaries,
                               const std::optional<fs::path>& cache_dir, std::size_t jobs) {
  struct Outcome {
    std::optional<DwarfIndex> index;
    std::string skipped;
  };
  auto results = parallel_map(binaries.size(), jobs, [&](std::size_t i) {
    Outcome o;
    const auto& path = binaries[i];
    if (!fs::exists(path)) throw Error(ErrorKind::kIo, "no such binary: " + path.string());
    if (!looks_like_elf(path)) {
      o.skipped = path.string() + ": not an ELF file";
      return o;
    }
    try {
      o.index = index_binary_cached(path, cache_dir);
      for (const auto& w : o.index->warnings()) spdlog::debug("{}: {}", path.string(), w);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::kNoDebugInfo) throw;
      o.skipped = path.string() + ": no debug info";
    }
    return o;
  });
  IndexedBinaries out;
  for (auto& r : results) {
    if (r.index) {
      auto id = r.index->binary_id();
      out.indices.emplace(std::move(id), std::move(*r.index));
    } else {
      spdlog::info("skipping {}", r.skipped);
      out.skipped.push_back(std::move(r.skipped));
    }
  }
  return out;
}

void write_index(const fs::path& dir, const DwarfIndex& index) {
  write_file(dir / (index.binary_id() + ".dwarfindex"), dump_line(index.to_json()) + "\n");
}

std::map<std::string, DwarfIndex> read_index_dir(const fs::path& dir) {
  std::map<std::string, DwarfIndex> out;
  for (const auto& p : list_files(dir, ".dwarfindex")) {
    auto idx = DwarfIndex::from_json(parse_json(read_file(p), p.string()));
    auto id = idx.binary_id();
    out.emplace(std::move(id), std::move(idx));
  }
  return out;
}

// ---- ingest -----------------------------------------------------------------------

std::vector<FunctionRecord> ingest_exports(const std::vector<fs::path>& files, std::size_t jobs) {
  auto per_file = parallel_map(files.size(), jobs, [&](std::size_t i) {
    std::vector<FunctionRecord> recs;
    for_each_line(files[i], [&](std::string_view line, std::size_t n) {
      recs.push_back(parse_export_record(line, files[i].string() + ":" + std::to_string(n)));
    });
    return recs;
  });
  std::vector<FunctionRecord> out;
  for (auto& v : per_file) {
    for (auto& r : v) out.push_back(std::move(r));
  }
  return out;
}

void write_records(const fs::path& path, const std::vector<FunctionRecord>& records) {
  std::string out;
  for (const auto& r : records) {
    out += serialize_record(r);
    out += '\n';
  }
  write_file(path, out);
}

std::vector<FunctionRecord> read_records(const fs::path& path) {
  return ingest_exports({path}, 1);
}

// ---- build-corpus -----------------------------------------------------------------

SplitName split_from(std::string_view text) {
  if (text == "train") return SplitName::kTrain;
  if (text == "valid") return SplitName::kValid;
  if (text == "test") return SplitName::kTest;
  throw Error(ErrorKind::kValidation, "unknown split '" + std::string(text) + "'");
}

std::string render_corpus_stats(const CorpusOnDisk& corpus) {
  return render_stats_table(compute_stats(corpus.train()), "train", StatsLayout::kTrain) + "\n" +
         render_stats_table(compute_stats(corpus.test()), "test", StatsLayout::kTest);
}

std::string render_corpus_stats_csv(const CorpusOnDisk& corpus) {
  std::string out;
  bool first = true;
  for (const auto& s : corpus.splits) {
    auto csv = render_stats_csv(compute_stats(s), to_string(s.name));
    if (!first) csv.erase(0, csv.find('\n') + 1);
    first = false;
    out += csv;
  }
  return out;
}

CorpusOnDisk write_corpus(const BuiltCorpus& corpus, const CorpusOptions& options,
                          std::uint64_t min_type_count,
                          const std::map<std::string, std::string>& inputs, const fs::path& out_dir) {
  const auto started = utc_now();
  CorpusOnDisk disk;
  disk.splits = corpus.splits;
  disk.lexicon = build_type_lexicon(corpus.train().examples, min_type_count);

  RunManifest m;
  m.subcommand = "build-corpus";
  m.inputs = inputs;
  m.seed = options.seed;
  m.config = {{"schema", kInterchangeSchema},
              {"mode", std::string(to_string(options.mode))},
              {"ratios", {options.ratios.train, options.ratios.valid, options.ratios.test}},
              {"min_type_count", min_type_count},
              {"lookup", "function, then globals"}};
  Json splits = Json::object();
  for (const auto& s : corpus.splits) {
    splits[std::string(to_string(s.name))] = stats_to_json(compute_stats(s));
  }
  m.summary = {{"records_in", corpus.accounting.records_in},
               {"kept", corpus.accounting.kept},
               {"rejected", corpus.accounting.rejected},
               {"splits", std::move(splits)},
               {"lexicon_size", disk.lexicon.size()},
               {"lexicon_digest", disk.lexicon.digest()}};
  disk.manifest_hash = m.hash();
  disk.manifest = m.to_json();

  for (const auto& s : corpus.splits) {
    write_split(out_dir / (std::string(to_string(s.name)) + ".jsonl"), s, disk.manifest_hash);
  }
  write_file(out_dir / "lexicon.json", disk.lexicon.to_json().dump(2) + "\n");
  write_file(out_dir / "stats.txt", render_corpus_stats(disk));
  write_file(out_dir / "stats.csv", render_corpus_stats_csv(disk));
  write_manifest(out_dir / "manifest.json", m, started);
  return disk;
}

CorpusOnDisk read_corpus(const fs::path& dir) {
  const auto manifest_path = dir / "manifest.json";
  if (!fs::exists(manifest_path)) {
    throw Error(ErrorKind::kIo, "not a corpus directory (missing " + manifest_path.string() + ")");
  }
  CorpusOnDisk disk;
  disk.manifest = parse_json(read_file(manifest_path), manifest_path.string());
  const auto m = RunManifest::from_json(disk.manifest);
  disk.manifest_hash = m.hash();
  for (auto name : {SplitName::kTrain, SplitName::kValid, SplitName::kTest}) {
    disk.splits[static_cast<std::size_t>(name)] =
        read_split(dir / (std::string(to_string(name)) + ".jsonl"), name, &disk.manifest_hash);
  }
  const auto lex_path = dir / "lexicon.json";
  disk.lexicon = TypeLexicon::from_json(parse_json(read_file(lex_path), lex_path.string()));
  return disk;
}

// ---- baselines / predict ----------------------------------------------------------

Baselines fit_baselines(const CorpusOnDisk& corpus) {
  return {corpus.lexicon, SizeConditionedTable::fit(corpus.train().examples)};
}

Json baselines_to_json(const Baselines& b) {
  return Json{{"lexicon", b.lexicon.to_json()}, {"size_table", b.size_table.to_json()}};
}

Baselines baselines_from_json(const Json& j) {
  return {TypeLexicon::from_json(require(j, "lexicon")),
          SizeConditionedTable::from_json(require(j, "size_table"))};
}

std::vector<Prediction> predict_split(std::string_view predictor, const CorpusSplit& split,
                                      const Baselines* baselines, const model::Retyper* model,
                                      std::size_t jobs) {
  const auto& ex = split.examples;
  if (predictor == kIdentityPredictor) {
    return parallel_map(ex.size(), jobs, [&](std::size_t i) { return predict_identity(ex[i]); });
  }
  if (predictor == kMostFrequentPredictor || predictor == kSizeConditionedPredictor) {
    if (!baselines) throw Error(ErrorKind::kValidation, std::string(predictor) + " needs fitted baselines");
    if (predictor == kMostFrequentPredictor) {
      return parallel_map(ex.size(), jobs,
                          [&](std::size_t i) { return predict_most_frequent(ex[i], baselines->lexicon); });
    }
    return parallel_map(ex.size(), jobs, [&](std::size_t i) {
      return predict_size_conditioned(ex[i], baselines->size_table);
    });
  }
  if (predictor == kRetyperPredictor) {
    if (!model) throw Error(ErrorKind::kValidation, "retyper predictions need a checkpoint");
    return parallel_map(ex.size(), jobs, [&](std::size_t i) { return model->predict(ex[i]); });
  }
  throw Error(ErrorKind::kValidation, "unknown predictor '" + std::string(predictor) + "'");
}

// ---- pipeline ---------------------------------------------------------------------

PipelineResult run_pipeline(const fs::path& binaries_dir, const fs::path& exports_dir,
                            const fs::path& out_dir, const PipelineOptions& options) {
  const auto started = utc_now();
  PipelineResult result;

  const auto binaries = list_files(binaries_dir);
  const auto exports = list_files(exports_dir, ".jsonl");
  if (exports.empty()) {
    throw Error(ErrorKind::kIo, "no .jsonl export files in " + exports_dir.string());
  }
  std::map<std::string, std::string> inputs;
  for (const auto& b : binaries) inputs["binary:" + b.filename().string()] = sha256_file(b);
  for (const auto& e : exports) inputs["export:" + e.filename().string()] = sha256_file(e);

  spdlog::info("indexing {} files", binaries.size());
  auto indexed = index_binaries(binaries, options.cache_dir, options.jobs);
  for (const auto& [id, idx] : indexed.indices) write_index(out_dir / "index", idx);
  result.binaries_indexed = indexed.indices.size();
  result.binaries_skipped = indexed.skipped.size();

  spdlog::info("ingesting {} export files", exports.size());
  const auto records = ingest_exports(exports, options.jobs);
  write_records(out_dir / "records.jsonl", records);

  const auto built = build_corpus(records, indexed.indices, options.corpus);
  const auto corpus =
      write_corpus(built, options.corpus, options.min_type_count, inputs, out_dir / "corpus");
  result.corpus_manifest_hash = corpus.manifest_hash;

  const auto baselines = fit_baselines(corpus);
  write_file(out_dir / "baselines.json", baselines_to_json(baselines).dump(2) + "\n");

  spdlog::info("training on {} functions", corpus.train().examples.size());
  auto trained = model::train(corpus.train().examples, corpus.valid().examples, options.model,
                              options.train);
  model::save_checkpoint(out_dir / "model.ckpt", trained.model, corpus.manifest_hash);
  write_file(out_dir / "train_log.csv", model::render_train_log(trained.log));

  Json reports = Json::object();
  for (auto name : {kIdentityPredictor, kMostFrequentPredictor, kSizeConditionedPredictor,
                    kRetyperPredictor}) {
    const auto preds = predict_split(name, corpus.test(), &baselines, &trained.model, options.jobs);
    const std::string stem(name);
    write_predictions(out_dir / "predictions" / (stem + ".jsonl"), preds, corpus.manifest_hash);
    auto report = aggregate(corpus.test(), preds);
    report.predictor = stem;
    report.manifest_hash = corpus.manifest_hash;
    report.mode = std::string(to_string(options.corpus.mode));
    write_file(out_dir / "reports" / (stem + ".json"), report_to_json(report).dump(2) + "\n");
    write_file(out_dir / "reports" / (stem + ".txt"), render_report_text(report));
    write_file(out_dir / "reports" / (stem + ".csv"), render_report_csv(report));
    reports[stem] = report_to_json(report);
    result.reports.emplace(stem, std::move(report));
  }

  RunManifest m;
  m.subcommand = "pipeline";
  m.inputs = inputs;
  m.seed = options.corpus.seed;
  m.config = {{"mode", std::string(to_string(options.corpus.mode))},
              {"ratios", {options.corpus.ratios.train, options.corpus.ratios.valid, options.corpus.ratios.test}},
              {"min_type_count", options.min_type_count},
              {"model", trained.model.config().to_json()},
              {"train", options.train.to_json()}};
  m.summary = {{"corpus_manifest", corpus.manifest_hash},
               {"binaries_indexed", result.binaries_indexed},
               {"binaries_skipped", result.binaries_skipped},
               {"records", records.size()},
               {"best_epoch", trained.best_epoch},
               {"checkpoint_sha256", sha256_file(out_dir / "model.ckpt")},
               {"reports", std::move(reports)}};
  write_manifest(out_dir / "manifest.json", m, started);
  return result;
}

}  // namespace retype
