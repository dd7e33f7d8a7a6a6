#include "synth.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "retype/corpus.hpp"
#include "retype/hash.hpp"
#include "retype/pipeline.hpp"

namespace testsupport {

fs::path fixture_dir() { return RETYPE_FIXTURE_DIR; }
fs::path bin_dir() { return fixture_dir() / "bin"; }
fs::path stripped_dir() { return fixture_dir() / "stripped"; }
fs::path exports_dir() { return fixture_dir() / "exports"; }
fs::path golden_dir() { return RETYPE_GOLDEN_DIR; }
fs::path cli_path() { return RETYPE_CLI; }
fs::path readelf_path() { return RETYPE_READELF; }

fs::path scratch_dir(const std::string& name) {
  fs::path p = fs::path(RETYPE_TEST_TMP) / name;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const Fixture& fixture() {
  static const Fixture f = [] {
    Fixture out;
    out.binaries = retype::list_files(bin_dir());
    for (const auto& b : out.binaries) out.id_of[b.filename().string()] = retype::sha256_file(b);
    out.records = retype::ingest_exports(retype::list_files(exports_dir(), ".jsonl"), 1);
    out.indices = retype::index_binaries(out.binaries, std::nullopt, 1).indices;
    return out;
  }();
  return f;
}

const std::vector<std::string>& helper_binaries() {
  static const std::vector<std::string> names = {"bin02", "bin05", "bin09", "bin14"};
  return names;
}

std::uint64_t fixture_seed() {
  static const std::uint64_t seed = [] {
    const retype::SplitRatios ratios;
    for (std::uint64_t s = 1; s < 10000; ++s) {
      std::size_t valid = 0, test = 0;
      for (const auto& [name, id] : fixture().id_of) {
        const auto split = retype::assign_split(id, ratios, s);
        valid += split == retype::SplitName::kValid;
        test += split == retype::SplitName::kTest;
      }
      if (valid >= 1 && test >= 2) return s;
    }
    throw std::runtime_error("no usable fixture seed");
  }();
  return seed;
}

CliResult run_cli(const std::vector<std::string>& args) {
  static int counter = 0;
  const fs::path dir = fs::path(RETYPE_TEST_TMP) / "cli";
  fs::create_directories(dir);
  const fs::path out = dir / ("out" + std::to_string(counter));
  const fs::path err = dir / ("err" + std::to_string(counter));
  ++counter;
  std::string cmd = "'" + cli_path().string() + "'";
  for (const auto& a : args) cmd += " '" + a + "'";
  cmd += " >'" + out.string() + "' 2>'" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  CliResult r;
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

retype::FunctionRecord debug_record(const std::string& binary_id, const std::string& function,
                                    std::uint64_t entry, const std::vector<std::string>& names) {
  retype::FunctionRecord r;
  r.binary_id = binary_id;
  r.function = function;
  r.entry = entry;
  r.view = retype::View::kDebug;
  std::string code = "void " + function + "(void)\n{\n";
  for (std::size_t i = 0; i < names.size(); ++i) {
    retype::VariableRecord v;
    v.decomp_name = names[i];
    v.storage = {retype::StorageKind::kStack, -8 * static_cast<std::int64_t>(i + 1), 4};
    v.decomp_type = retype::TypeDescriptor::primitive("int", 4);
    r.variables.push_back(v);
    code += "  " + names[i] + " = " + std::to_string(i) + ";\n";
  }
  code += "}\n";
  r.raw_code = code;
  r.tokens = retype::canonicalize_tokens(r.raw_code, r.variables);
  return r;
}

}  // namespace testsupport
