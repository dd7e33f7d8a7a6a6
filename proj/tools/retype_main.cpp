#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "retype/error.hpp"
#include "retype/hash.hpp"
#include "retype/model/checkpoint.hpp"
#include "retype/pipeline.hpp"

namespace {

using namespace retype;

std::optional<fs::path> cache_dir_from_env() {
  const char* v = std::getenv("RETYPER_CACHE_DIR");
  if (!v || !*v) return std::nullopt;
  return fs::path(v);
}

std::string manifest_path_for(const fs::path& out) { return out.string() + ".manifest.json"; }

std::map<std::string, std::string> hash_inputs(const std::string& label,
                                               const std::vector<fs::path>& files) {
  std::map<std::string, std::string> out;
  for (const auto& f : files) {
    if (!fs::exists(f)) throw Error(ErrorKind::kIo, "no such file: " + f.string());
    out[label + ":" + f.filename().string()] = sha256_file(f);
  }
  return out;
}

struct Flags {
  std::size_t jobs = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 1;
  std::string ratios = "0.8,0.1,0.1";
  std::string mode = "aligned";
  std::uint64_t min_type_count = 1;
  double mask_penalty = 0.0;
  // model and training
  std::size_t d_model = 64, heads = 4, layers = 2, ff = 128, max_len = 256;
  bool no_layout = false;
  std::size_t epochs = 20, batch_size = 8;
  double lr = 1e-3;

  model::ModelConfig model_config() const {
    model::ModelConfig c;
    c.d_model = d_model;
    c.heads = heads;
    c.layers = layers;
    c.ff = ff;
    c.max_len = max_len;
    c.mask_penalty = mask_penalty;
    c.use_layout = !no_layout;
    c.seed = seed;
    c.validate();
    return c;
  }
  model::TrainOptions train_options() const {
    model::TrainOptions o;
    o.epochs = epochs;
    o.batch_size = batch_size;
    o.learning_rate = lr;
    o.min_type_count = min_type_count;
    o.seed = seed;
    return o;
  }
  CorpusOptions corpus_options() const {
    return {alignment_mode_from(mode), parse_ratios(ratios), seed};
  }
};

void add_corpus_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--seed", f.seed, "Seed for splitting and initialization");
  cmd->add_option("--ratios", f.ratios, "train,valid,test split ratios");
  cmd->add_option("--mode", f.mode, "How gold labels reach the input")
      ->check(CLI::IsMember({"aligned", "debug-direct"}));
  cmd->add_option("--min-type-count", f.min_type_count, "Drop rarer types from the lexicon");
}

void add_model_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--mask-penalty", f.mask_penalty, "Size-mask logit penalty (0 disables)");
  cmd->add_option("--d-model", f.d_model);
  cmd->add_option("--heads", f.heads);
  cmd->add_option("--layers", f.layers);
  cmd->add_option("--ff", f.ff, "Feed-forward width");
  cmd->add_option("--max-len", f.max_len, "Tokens kept per function");
  cmd->add_flag("--no-layout", f.no_layout, "Disable the layout encoder");
  cmd->add_option("--epochs", f.epochs);
  cmd->add_option("--batch-size", f.batch_size);
  cmd->add_option("--lr", f.lr, "Adam learning rate");
}

int run(int argc, char** argv) {
  CLI::App app{"Variable type recovery: DWARF ground truth, corpora, baselines and a retyping model"};
  app.set_version_flag("--version", std::string(tool_version()));
  app.require_subcommand(1);
  app.fallthrough();
  Flags f;
  bool verbose = false;
  app.add_option("--jobs,-j", f.jobs, "Worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--verbose,-v", verbose, "Debug logging");

  // index-dwarf
  std::vector<fs::path> binaries;
  fs::path out;
  auto* index_cmd = app.add_subcommand("index-dwarf", "Write <binary_id>.dwarfindex per ELF binary");
  index_cmd->add_option("binaries", binaries, "ELF files with DWARF 4/5")->required();
  index_cmd->add_option("-o,--out", out, "Output directory")->required();

  // ingest
  std::vector<fs::path> exports;
  auto* ingest_cmd = app.add_subcommand("ingest", "Validate export files into one record file");
  ingest_cmd->add_option("exports", exports, "Line-delimited export files")->required();
  ingest_cmd->add_option("-o,--out", out, "Output records file")->required();

  // build-corpus
  std::vector<fs::path> record_files;
  fs::path index_dir;
  auto* build_cmd = app.add_subcommand("build-corpus", "Label, filter and split records");
  build_cmd->add_option("--records", record_files, "Record files from ingest")->required();
  build_cmd->add_option("--index-dir", index_dir, "Directory of .dwarfindex files")->required();
  build_cmd->add_option("-o,--out", out, "Corpus directory")->required();
  add_corpus_flags(build_cmd, f);

  // stats
  fs::path corpus_dir;
  std::string split_name;
  bool csv = false;
  auto* stats_cmd = app.add_subcommand("stats", "Corpus statistics tables");
  stats_cmd->add_option("corpus", corpus_dir, "Corpus directory")->required();
  stats_cmd->add_option("--split", split_name, "One split only")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  stats_cmd->add_flag("--csv", csv, "Raw counts as CSV");

  // fit-baselines
  auto* fit_cmd = app.add_subcommand("fit-baselines", "Fit frequency baselines on the train split");
  fit_cmd->add_option("corpus", corpus_dir, "Corpus directory")->required();
  fit_cmd->add_option("-o,--out", out, "Baselines file")->required();

  // train
  fs::path log_path;
  auto* train_cmd = app.add_subcommand("train", "Train the retyper");
  train_cmd->add_option("corpus", corpus_dir, "Corpus directory")->required();
  train_cmd->add_option("-o,--out", out, "Checkpoint file")->required();
  train_cmd->add_option("--log", log_path, "Training log CSV (default <out>.log.csv)");
  train_cmd->add_option("--seed", f.seed, "Initialization and shuffling seed");
  train_cmd->add_option("--min-type-count", f.min_type_count, "Drop rarer types from the lexicon");
  add_model_flags(train_cmd, f);

  // predict
  std::string predictor;
  fs::path model_path;
  fs::path baselines_path;
  auto* predict_cmd = app.add_subcommand("predict", "Predict types for one split");
  predict_cmd->add_option("corpus", corpus_dir, "Corpus directory")->required();
  predict_cmd->add_option("--predictor", predictor)
      ->required()
      ->check(CLI::IsMember({"identity", "most-frequent", "size-conditioned", "retyper"}));
  predict_cmd->add_option("--model", model_path, "Checkpoint (retyper)");
  predict_cmd->add_option("--baselines", baselines_path, "Baselines file (frequency predictors)");
  predict_cmd->add_option("--split", split_name, "Split to predict (default test)")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  predict_cmd->add_option("-o,--out", out, "Predictions file")->required();

  // evaluate
  fs::path predictions_path;
  fs::path csv_out;
  auto* eval_cmd = app.add_subcommand("evaluate", "Score predictions into an accuracy report");
  eval_cmd->add_option("corpus", corpus_dir, "Corpus directory")->required();
  eval_cmd->add_option("--predictions", predictions_path, "Predictions file")->required();
  eval_cmd->add_option("--split", split_name, "Split the predictions cover (default test)")
      ->check(CLI::IsMember({"train", "valid", "test"}));
  eval_cmd->add_option("-o,--out", out, "Report JSON")->required();
  eval_cmd->add_option("--csv-out", csv_out, "Also write the CSV here");

  // report
  fs::path report_path;
  auto* report_cmd = app.add_subcommand("report", "Render a report JSON as a table");
  report_cmd->add_option("report", report_path, "Report JSON from evaluate")->required();
  report_cmd->add_flag("--csv", csv, "CSV with raw counts");

  // pipeline
  fs::path binaries_dir;
  fs::path exports_dir;
  auto* pipe_cmd = app.add_subcommand("pipeline", "Run every stage end to end");
  pipe_cmd->add_option("--binaries", binaries_dir, "Directory of binaries")->required();
  pipe_cmd->add_option("--exports", exports_dir, "Directory of .jsonl export files")->required();
  pipe_cmd->add_option("-o,--out", out, "Output directory")->required();
  add_corpus_flags(pipe_cmd, f);
  add_model_flags(pipe_cmd, f);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  auto logger = spdlog::stderr_color_st("retype");
  logger->set_pattern("%^%l%$: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::warn);

  const auto started = utc_now();
  const auto cache = cache_dir_from_env();

  if (*index_cmd) {
    auto indexed = index_binaries(binaries, cache, f.jobs);
    for (const auto& [id, idx] : indexed.indices) {
      write_index(out, idx);
      std::size_t vars = 0;
      for (const auto& fn : idx.functions()) vars += fn.variables.size();
      std::printf("%s  %zu functions  %zu variables  %zu globals\n", id.c_str(),
                  idx.functions().size(), vars, idx.globals().size());
    }
    for (const auto& s : indexed.skipped) std::printf("skipped %s\n", s.c_str());
    RunManifest m;
    m.subcommand = "index-dwarf";
    m.inputs = hash_inputs("binary", binaries);
    m.summary = {{"indexed", indexed.indices.size()}, {"skipped", indexed.skipped}};
    write_manifest(out / "manifest.json", m, started);
    return 0;
  }

  if (*ingest_cmd) {
    const auto records = ingest_exports(exports, f.jobs);
    write_records(out, records);
    std::map<std::string, std::uint64_t> by_status;
    for (const auto& r : records) ++by_status[std::string(to_string(r.status))];
    RunManifest m;
    m.subcommand = "ingest";
    m.inputs = hash_inputs("export", exports);
    m.summary = {{"records", records.size()}, {"status", by_status}};
    write_manifest(manifest_path_for(out), m, started);
    std::printf("%zu records\n", records.size());
    return 0;
  }

  if (*build_cmd) {
    const auto options = f.corpus_options();
    std::vector<FunctionRecord> records;
    for (const auto& p : record_files) {
      auto part = read_records(p);
      records.insert(records.end(), std::make_move_iterator(part.begin()),
                     std::make_move_iterator(part.end()));
    }
    const auto indices = read_index_dir(index_dir);
    auto inputs = hash_inputs("records", record_files);
    for (const auto& [id, idx] : indices) inputs["index:" + id] = id;
    const auto built = build_corpus(records, indices, options);
    const auto disk = write_corpus(built, options, f.min_type_count, inputs, out);
    std::printf("%s", render_corpus_stats(disk).c_str());
    std::printf("manifest %s\n", disk.manifest_hash.c_str());
    return 0;
  }

  if (*stats_cmd) {
    const auto corpus = read_corpus(corpus_dir);
    if (!split_name.empty()) {
      const auto name = split_from(split_name);
      const auto s = compute_stats(corpus.split(name));
      std::printf("%s", csv ? render_stats_csv(s, split_name).c_str()
                            : render_stats_table(s, split_name, default_layout(name)).c_str());
    } else {
      std::printf("%s", csv ? render_corpus_stats_csv(corpus).c_str()
                            : render_corpus_stats(corpus).c_str());
    }
    return 0;
  }

  if (*fit_cmd) {
    const auto corpus = read_corpus(corpus_dir);
    const auto b = fit_baselines(corpus);
    Json j = baselines_to_json(b);
    j["manifest"] = corpus.manifest_hash;
    write_file(out, j.dump(2) + "\n");
    RunManifest m;
    m.subcommand = "fit-baselines";
    m.inputs = {{"corpus", corpus.manifest_hash}};
    m.summary = {{"size_table_entries", b.size_table.size()},
                 {"most_frequent", b.lexicon.at(0).text}};
    write_manifest(manifest_path_for(out), m, started);
    return 0;
  }

  if (*train_cmd) {
    const auto corpus = read_corpus(corpus_dir);
    const auto config = f.model_config();
    const auto options = f.train_options();
    auto result = model::train(corpus.train().examples, corpus.valid().examples, config, options);
    model::save_checkpoint(out, result.model, corpus.manifest_hash);
    if (log_path.empty()) log_path = out.string() + ".log.csv";
    write_file(log_path, model::render_train_log(result.log));
    RunManifest m;
    m.subcommand = "train";
    m.inputs = {{"corpus", corpus.manifest_hash}};
    m.seed = f.seed;
    m.config = {{"model", result.model.config().to_json()}, {"train", options.to_json()}};
    m.summary = {{"best_epoch", result.best_epoch},
                 {"parameters", result.model.params().scalar_count()},
                 {"checkpoint_sha256", sha256_file(out)},
                 {"parameter_checksum", hex64(result.model.params().checksum())}};
    write_manifest(manifest_path_for(out), m, started);
    const auto& best = result.log[result.best_epoch];
    std::printf("best epoch %zu: train loss %.6f", result.best_epoch, best.train_loss);
    if (best.valid_accuracy) std::printf(", valid accuracy %.4f", *best.valid_accuracy);
    std::printf("\n");
    return 0;
  }

  if (*predict_cmd) {
    const auto corpus = read_corpus(corpus_dir);
    const auto& split = corpus.split(split_name.empty() ? SplitName::kTest : split_from(split_name));
    std::optional<Baselines> baselines;
    std::optional<model::LoadedCheckpoint> ckpt;
    std::map<std::string, std::string> inputs{{"corpus", corpus.manifest_hash}};
    if (predictor == kMostFrequentPredictor || predictor == kSizeConditionedPredictor) {
      if (baselines_path.empty()) {
        baselines = fit_baselines(corpus);
      } else {
        baselines = baselines_from_json(parse_json(read_file(baselines_path), baselines_path.string()));
        inputs["baselines"] = sha256_file(baselines_path);
      }
    }
    if (predictor == kRetyperPredictor) {
      if (model_path.empty()) throw Error(ErrorKind::kValidation, "--model is required for the retyper");
      ckpt = model::load_checkpoint(model_path);
      inputs["model"] = sha256_file(model_path);
      if (ckpt->manifest_hash != corpus.manifest_hash) {
        spdlog::warn("checkpoint was trained on corpus {}, predicting on {}", ckpt->manifest_hash,
                     corpus.manifest_hash);
      }
    }
    const auto preds = predict_split(predictor, split, baselines ? &*baselines : nullptr,
                                     ckpt ? &ckpt->model : nullptr, f.jobs);
    write_predictions(out, preds, corpus.manifest_hash);
    RunManifest m;
    m.subcommand = "predict";
    m.inputs = inputs;
    m.config = {{"predictor", predictor}, {"split", std::string(to_string(split.name))}};
    m.summary = {{"functions", preds.size()}};
    write_manifest(manifest_path_for(out), m, started);
    return 0;
  }

  if (*eval_cmd) {
    const auto corpus = read_corpus(corpus_dir);
    const auto& split = corpus.split(split_name.empty() ? SplitName::kTest : split_from(split_name));
    const auto preds = read_predictions(predictions_path);
    auto report = aggregate(split, preds);
    report.manifest_hash = corpus.manifest_hash;
    report.mode = corpus.manifest.at("config").at("mode").get<std::string>();
    const Json rj = report_to_json(report);
    write_file(out, rj.dump(2) + "\n");
    if (!csv_out.empty()) write_file(csv_out, render_report_csv(report));
    RunManifest m;
    m.subcommand = "evaluate";
    m.inputs = {{"corpus", corpus.manifest_hash}, {"predictions", sha256_file(predictions_path)}};
    m.summary = rj;
    write_manifest(manifest_path_for(out), m, started);
    std::printf("%s", render_report_text(report).c_str());
    return 0;
  }

  if (*report_cmd) {
    const auto report = report_from_json(parse_json(read_file(report_path), report_path.string()));
    report.check_partitions();
    std::printf("%s", csv ? render_report_csv(report).c_str() : render_report_text(report).c_str());
    return 0;
  }

  if (*pipe_cmd) {
    PipelineOptions o;
    o.corpus = f.corpus_options();
    o.min_type_count = f.min_type_count;
    o.model = f.model_config();
    o.train = f.train_options();
    o.jobs = f.jobs;
    o.cache_dir = cache;
    const auto result = run_pipeline(binaries_dir, exports_dir, out, o);
    std::printf("%zu binaries indexed, %zu skipped; corpus %s\n", result.binaries_indexed,
                result.binaries_skipped, result.corpus_manifest_hash.c_str());
    for (const auto& [name, report] : result.reports) {
      std::printf("\n%s", render_report_text(report).c_str());
    }
    return 0;
  }
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const retype::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.is_input_error() ? 1 : 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "internal error: %s\n", e.what());
    return 2;
  }
}
