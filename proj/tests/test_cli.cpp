#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

// End-to-end tests of the installed command-line binary, located through the
// HTLAB_CLI environment variable set by the test harness. Every invocation is
// a real process; exit codes and on-disk artifacts are the contract.

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const char* kHeavyPair =
    R"({"d":1,"atoms":[{"p":0.5,"a":0.3333333333333333,"b":1.0},{"p":0.5,"a":2.0,"b":1.0}]})";
const char* kCantorPair =
    R"({"d":1,"atoms":[{"p":0.5,"a":0.5,"b":1.0},{"p":0.5,"a":0.3333333333333333,"b":1.0}]})";

std::string cli() {
  const char* path = std::getenv("HTLAB_CLI");
  REQUIRE_MESSAGE(path != nullptr, "HTLAB_CLI must point at the binary under test");
  return path;
}

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "htlab_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  REQUIRE(out.good());
  out << content;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE_MESSAGE(in.good(), ("missing file: " + path.string()));
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct RunResult {
  int code = -1;
  std::string out;
};

RunResult run(const std::string& args, const fs::path& dir) {
  const fs::path stdout_file = dir / "last_stdout.txt";
  const std::string cmd =
      "\"" + cli() + "\" " + args + " > \"" + stdout_file.string() + "\" 2>/dev/null";
  const int raw = std::system(cmd.c_str());
  RunResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  std::ifstream in(stdout_file, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  r.out = buf.str();
  return r;
}

// config pointing at a sibling measure file, with a fast spectral block
fs::path make_config(const fs::path& dir, const char* measure, const std::string& extra = "") {
  write_file(dir / "measure.json", measure);
  json config;
  config["seed"] = 1;
  config["measure"] = "measure.json";
  config["spectral"] = {{"alpha_steps", 2000}, {"alpha_trials", 16}, {"nu1_particles", 4096}};
  if (!extra.empty()) {
    const json patch = json::parse(extra);
    for (const auto& [key, value] : patch.items()) config[key] = value;
  }
  const fs::path path = dir / "config.json";
  write_file(path, config.dump(2));
  return path;
}

}  // namespace

TEST_CASE("version flag exits cleanly") {
  const fs::path dir = scratch_dir("version");
  CHECK(run("--version", dir).code == 0);
}

TEST_CASE("usage errors exit with the configuration code") {
  const fs::path dir = scratch_dir("usage");
  CHECK(run("", dir).code == 2);                      // a subcommand is required
  CHECK(run("frobnicate", dir).code == 2);            // unknown subcommand
  CHECK(run("validate", dir).code == 2);              // --config is required
  CHECK(run("validate --config x --bogus", dir).code == 2);
}

TEST_CASE("validate prints the verdict and writes the artifact") {
  const fs::path dir = scratch_dir("validate_ok");
  const fs::path config = make_config(dir, kHeavyPair);
  const fs::path out = dir / "out";

  const RunResult r =
      run("validate --config \"" + config.string() + "\" --out \"" + out.string() + "\"", dir);
  CHECK(r.code == 0);
  const json verdict = json::parse(r.out);
  CHECK(verdict["accepted"] == true);
  CHECK(json::parse(read_file(out / "validation.json")) == verdict);
}

TEST_CASE("validate rejects a broken measure with exit code 2") {
  const fs::path dir = scratch_dir("validate_bad");
  const fs::path config = make_config(
      dir, R"({"d":1,"atoms":[{"p":0.7,"a":1.0,"b":0.0},{"p":0.7,"a":2.0,"b":1.0}]})");
  const RunResult r = run("validate --config \"" + config.string() + "\" --out \"" +
                              (dir / "out").string() + "\"",
                          dir);
  CHECK(r.code == 2);
  const json verdict = json::parse(r.out);
  CHECK(verdict["accepted"] == false);
  CHECK(verdict["issues"][0]["code"] == "WeightsNotNormalized");
}

TEST_CASE("an inline measure object is accepted") {
  const fs::path dir = scratch_dir("inline_measure");
  json config;
  config["seed"] = 1;
  config["measure"] = json::parse(kHeavyPair);
  const fs::path path = dir / "config.json";
  write_file(path, config.dump());
  const RunResult r = run(
      "validate --config \"" + path.string() + "\" --out \"" + (dir / "out").string() + "\"",
      dir);
  CHECK(r.code == 0);
  CHECK(json::parse(r.out)["accepted"] == true);
}

TEST_CASE("a measure without tail exponent exits 3 and keeps the profile") {
  const fs::path dir = scratch_dir("no_root");
  const fs::path config = make_config(dir, kCantorPair);
  const fs::path out = dir / "out";

  const RunResult r =
      run("spectral --config \"" + config.string() + "\" --out \"" + out.string() + "\"", dir);
  CHECK(r.code == 3);
  const json diag = json::parse(r.out);
  CHECK(diag["stage"] == "spectral");
  CHECK(diag["code"] == "NoRootBelowCap");

  const json profile = json::parse(read_file(out / "profile.json"));
  CHECK(profile["chi"].is_null());
  CHECK(profile["chi_error"]["code"] == "NoRootBelowCap");
  CHECK(profile["alpha"]["value"].get<double>() < 0.0);
  CHECK(fs::exists(out / "kcurve.csv"));

  // the full report path surfaces the same condition
  const RunResult rep =
      run("report --config \"" + config.string() + "\" --out \"" + (dir / "out2").string() +
              "\"",
          dir);
  CHECK(rep.code == 3);
  CHECK(fs::exists(dir / "out2" / "profile.json"));
}

TEST_CASE("the report stage produces a passing check table") {
  const fs::path dir = scratch_dir("report_ok");
  const fs::path config = make_config(dir, kHeavyPair);
  const fs::path out = dir / "out";

  const RunResult r =
      run("report --config \"" + config.string() + "\" --out \"" + out.string() + "\"", dir);
  CHECK(r.code == 0);
  const json summary = json::parse(r.out);
  CHECK(summary["stage"] == "report");
  CHECK(summary["status"] == "ok");

  const json report = json::parse(read_file(out / "report.json"));
  CHECK(report["pass"] == true);
  CHECK(report["checks"].size() >= 10);
  for (const auto& row : report["checks"]) {
    CHECK_MESSAGE(row["pass"] == true, row["name"].get<std::string>());
  }
  for (const char* name :
       {"profile.json", "kcurve.csv", "samples.csv", "samples_meta.json", "tail_report.json",
        "structure_report.json", "fixed_points.csv", "radial.csv", "directional.csv",
        "angular.csv", "durations.json", "validation.json"}) {
    CHECK_MESSAGE(fs::exists(out / name), name);
  }
}

TEST_CASE("identical configs give byte-identical artifacts") {
  const fs::path dir = scratch_dir("determinism");
  const fs::path config = make_config(dir, kHeavyPair);
  const fs::path out1 = dir / "one";
  const fs::path out2 = dir / "two";

  CHECK(run("report --config \"" + config.string() + "\" --out \"" + out1.string() + "\"",
            dir).code == 0);
  CHECK(run("report --config \"" + config.string() + "\" --out \"" + out2.string() +
                "\" --threads 8",
            dir).code == 0);
  // timing varies; every numerical artifact must not
  for (const char* name : {"report.json", "profile.json", "kcurve.csv", "samples.csv",
                           "tail_report.json", "structure_report.json"}) {
    CHECK_MESSAGE(read_file(out1 / name) == read_file(out2 / name), name);
  }
}

TEST_CASE("the seed override changes the sampled artifact") {
  const fs::path dir = scratch_dir("seed_override");
  const fs::path config = make_config(dir, kHeavyPair, R"({"sample":{"n_samples":5000}})");
  const fs::path out1 = dir / "one";
  const fs::path out2 = dir / "two";
  const fs::path out3 = dir / "three";

  CHECK(run("sample --config \"" + config.string() + "\" --out \"" + out1.string() + "\"",
            dir).code == 0);
  CHECK(run("sample --config \"" + config.string() + "\" --out \"" + out2.string() +
                "\" --seed 99",
            dir).code == 0);
  CHECK(run("sample --config \"" + config.string() + "\" --out \"" + out3.string() +
                "\" --seed 1",
            dir).code == 0);
  CHECK(read_file(out1 / "samples.csv") != read_file(out2 / "samples.csv"));
  CHECK(read_file(out1 / "samples.csv") == read_file(out3 / "samples.csv"));
}

TEST_CASE("missing files are I/O failures") {
  const fs::path dir = scratch_dir("io_missing");
  const RunResult r = run("validate --config \"" + (dir / "absent.json").string() + "\"", dir);
  CHECK(r.code == 5);
  CHECK(json::parse(r.out)["code"] == "IoError");

  // measure path referenced by the config but not present
  json config;
  config["seed"] = 1;
  config["measure"] = "nowhere.json";
  write_file(dir / "config.json", config.dump());
  const RunResult r2 = run("validate --config \"" + (dir / "config.json").string() + "\"", dir);
  CHECK(r2.code == 5);
}

TEST_CASE("an unwritable output location is an I/O failure") {
  const fs::path dir = scratch_dir("io_unwritable");
  const fs::path config = make_config(dir, kHeavyPair);
  write_file(dir / "blocker", "plain file");
  // the output directory path runs through a regular file: creation must fail
  const fs::path out = dir / "blocker" / "out";
  const RunResult r =
      run("validate --config \"" + config.string() + "\" --out \"" + out.string() + "\"", dir);
  CHECK(r.code == 5);
  CHECK(json::parse(r.out)["code"] == "IoError");
}

TEST_CASE("config without a measure reference is rejected") {
  const fs::path dir = scratch_dir("no_measure");
  write_file(dir / "config.json", R"({"seed":1})");
  const RunResult r = run("validate --config \"" + (dir / "config.json").string() + "\"", dir);
  CHECK(r.code == 2);
  const json diag = json::parse(r.out);
  CHECK(diag["code"] == "InvalidArgument");
}
