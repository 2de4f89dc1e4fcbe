#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "eivfit/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kData = fs::path(EIVFIT_DATA_DIR) / "worldbank_analog.csv";
const fs::path kSchema = fs::path(EIVFIT_DATA_DIR) / "worldbank_analog.schema.json";

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("eivfit_cli_" + std::to_string(::getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

int cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "'" + std::string(EIVFIT_CLI_PATH) + "' " + args + " > '" + log.string() + "' 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fit_args(const fs::path& out) {
  return "fit --data '" + kData.string() + "' --schema '" + kSchema.string() + "' --out '" + out.string() + "'";
}

}  // namespace

TEST_CASE("successful fit writes report, table, split and manifest") {
  TempDir dir;
  const fs::path out = dir.path / "fit";
  REQUIRE(cli(fit_args(out) + " --group-size 8", dir.path / "log") == 0);
  for (const char* f : {"report.txt", "report.txt.tsv", "split.tsv", "manifest.json"}) CHECK(fs::exists(out / f));
  const auto report = eivfit::read_fit_report(out / "report.txt");
  CHECK(report.alpha_hat.size() == 5);
  CHECK(report.metrics.at("groups") == 22.0);
  CHECK(report.metrics.at("train_size") == 172.0);
  const auto manifest = eivfit::read_manifest(out / "manifest.json");
  CHECK(manifest.output_digests.at("report.txt.tsv") == eivfit::sha256_hex(out / "report.txt.tsv"));
  CHECK(manifest.config.at("group_size") == 8);
}

TEST_CASE("usage errors exit with 2") {
  TempDir dir;
  CHECK(cli("", dir.path / "log") == 2);
  CHECK(cli("fit --data x.csv", dir.path / "log") == 2);
  CHECK(cli("simulate --scenario Z --out o", dir.path / "log") == 2);
  CHECK(cli(fit_args(dir.path / "o") + " --objective gauss-line", dir.path / "log") == 2);
  CHECK(cli("simulate --scenario C --groups 40 --reps 1 --out '" + (dir.path / "s").string() + "'", dir.path / "log") ==
        2);
}

TEST_CASE("data errors exit with 3") {
  TempDir dir;
  CHECK(cli("fit --data '" + (dir.path / "missing.csv").string() + "' --schema '" + kSchema.string() + "' --out '" +
                (dir.path / "o").string() + "'",
            dir.path / "log") == 3);
  std::ofstream(dir.path / "bad.csv") << "birth_rate,urban_population_pct\n1,2\n";
  CHECK(cli("fit --data '" + (dir.path / "bad.csv").string() + "' --schema '" + kSchema.string() + "' --out '" +
                (dir.path / "o").string() + "'",
            dir.path / "log") == 3);
}

TEST_CASE("an iteration cap that stops the optimizer exits with 4") {
  TempDir dir;
  CHECK(cli(fit_args(dir.path / "o") + " --max-iters 3", dir.path / "log") == 4);
  CHECK(fs::exists(dir.path / "o" / "report.txt"));
}

TEST_CASE("simulate, surface, eval and make-analog succeed") {
  TempDir dir;
  CHECK(cli("simulate --scenario B --groups 20 --reps 3 --seed 1 --out '" + (dir.path / "sim").string() + "'",
            dir.path / "log") == 0);
  CHECK(fs::exists(dir.path / "sim" / "summary.tsv"));
  CHECK(cli("surface --scenario A --groups 5 --range=-1:1:5 --out '" + (dir.path / "s.tsv").string() + "'",
            dir.path / "log") == 0);
  const auto s = eivfit::read_surface(dir.path / "s.tsv");
  CHECK(s.values.size() == 25);
  CHECK(fs::exists(dir.path / "s.tsv.manifest.json"));
  REQUIRE(cli(fit_args(dir.path / "fit"), dir.path / "log") == 0);
  CHECK(cli("eval --fit '" + (dir.path / "fit" / "report.txt").string() + "' --data '" + kData.string() +
                "' --schema '" + kSchema.string() + "' --out '" + (dir.path / "eval").string() + "'",
            dir.path / "log") == 0);
  CHECK(fs::exists(dir.path / "eval" / "eval.tsv"));
  CHECK(cli("make-analog --rows 10 --out '" + (dir.path / "a.csv").string() + "'", dir.path / "log") == 0);
  std::ifstream in(dir.path / "a.csv");
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) ++lines;
  CHECK(lines == 11);
}
