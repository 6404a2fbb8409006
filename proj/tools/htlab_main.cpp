// Batch front door: loads a config document, resolves the measure it points
// at, drives pipeline stages through the C API and persists every artifact
// with write-then-rename. All diagnostics go to standard output as JSON.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "htlab/htlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

int exit_code_of(htlab_status status) {
  switch (status) {
    case HTLAB_OK:
      return 0;
    case HTLAB_INVALID_ARGUMENT:
    case HTLAB_PARSE_ERROR:
    case HTLAB_VALIDATION_ERROR:
      return 2;
    case HTLAB_PRECONDITION_FAILED:
      return 3;
    case HTLAB_CHECK_FAILED:
    case HTLAB_INTERNAL_ERROR:
      return 4;
    case HTLAB_IO_ERROR:
      return 5;
  }
  return 4;
}

// Owns a string returned by the library.
struct ApiString {
  char* value = nullptr;
  ~ApiString() { htlab_string_free(value); }
  char** slot() { return &value; }
  bool has() const { return value != nullptr; }
  std::string str() const { return value ? std::string(value) : std::string(); }
};

struct CliError {
  int exit_code;
  json diagnostic;
};

[[noreturn]] void throw_cli(int exit_code, const std::string& stage, const std::string& code,
                            const std::string& message) {
  throw CliError{exit_code, {{"stage", stage}, {"code", code}, {"message", message}}};
}

// Diagnostic from a C API error document, augmented with the stage name.
[[noreturn]] void throw_api(htlab_status status, const std::string& stage,
                            const ApiString& error) {
  json doc;
  if (error.has()) {
    doc = json::parse(error.str(), nullptr, /*allow_exceptions=*/false);
  }
  if (!doc.is_object()) doc = {{"code", "Internal"}, {"message", "no diagnostic"}};
  doc["stage"] = stage;
  throw CliError{exit_code_of(status), doc};
}

std::string read_file(const fs::path& path, const std::string& stage) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_cli(5, stage, "IoError", "cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw_cli(5, stage, "IoError", "cannot read " + path.string());
  return buf.str();
}

void write_atomic(const fs::path& dir, const std::string& name, const std::string& content,
                  const std::string& stage) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw_cli(5, stage, "IoError", "cannot create " + dir.string() + ": " + ec.message());
  const fs::path tmp = dir / (name + ".tmp");
  const fs::path target = dir / name;
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_cli(5, stage, "IoError", "cannot open " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw_cli(5, stage, "IoError", "cannot write " + tmp.string());
  }
  fs::rename(tmp, target, ec);
  if (ec) {
    throw_cli(5, stage, "IoError",
              "cannot rename " + tmp.string() + " to " + target.string() + ": " + ec.message());
  }
}

struct Options {
  std::string config_path;
  std::string out_dir = ".";
  int threads = 0;
  bool threads_set = false;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

// Loads the config document, inlines the measure it references and applies
// command-line overrides. Returns (measure_json, config_json).
std::pair<std::string, std::string> prepare_documents(const Options& opt,
                                                      const std::string& stage) {
  const fs::path config_path(opt.config_path);
  const std::string config_text = read_file(config_path, stage);
  json config = json::parse(config_text, nullptr, /*allow_exceptions=*/false);
  if (config.is_discarded() || !config.is_object()) {
    throw_cli(2, stage, "ParseError", "config is not a JSON object: " + config_path.string());
  }
  if (!config.contains("measure")) {
    throw_cli(2, stage, "InvalidArgument", "config: measure is required");
  }

  std::string measure_json;
  if (config["measure"].is_string()) {
    fs::path measure_path(config["measure"].get<std::string>());
    if (measure_path.is_relative()) measure_path = config_path.parent_path() / measure_path;
    measure_json = read_file(measure_path, stage);
  } else if (config["measure"].is_object()) {
    measure_json = config["measure"].dump();
  } else {
    throw_cli(2, stage, "InvalidArgument", "config: measure must be a path or an object");
  }
  config.erase("measure");

  if (opt.seed_set) config["seed"] = opt.seed;
  if (opt.threads_set) config["threads"] = opt.threads;
  return {measure_json, config.dump()};
}

int run_stage(const Options& opt, const std::string& stage) {
  const auto [measure_json, config_json] = prepare_documents(opt, stage);

  ApiString create_error;
  htlab_session* session = nullptr;
  const htlab_status create_status = htlab_session_create(
      measure_json.c_str(), config_json.c_str(), &session, create_error.slot());
  if (create_status != HTLAB_OK) throw_api(create_status, stage, create_error);
  struct SessionGuard {
    htlab_session* s;
    ~SessionGuard() { htlab_session_destroy(s); }
  } guard{session};

  ApiString run_error;
  const htlab_status run_status = htlab_session_run(session, stage.c_str(), run_error.slot());

  // Artifacts are persisted even when the stage failed: partial output such
  // as the spectral profile of a measure without a tail exponent, or the
  // report with its failing check table, stays available on disk.
  std::vector<std::string> names;
  {
    ApiString list;
    if (htlab_session_artifact_list(session, list.slot()) == HTLAB_OK && list.has()) {
      const json parsed = json::parse(list.str(), nullptr, /*allow_exceptions=*/false);
      if (parsed.is_array()) {
        for (const auto& name : parsed) names.push_back(name.get<std::string>());
      }
    }
  }
  for (const std::string& name : names) {
    ApiString content;
    if (htlab_session_artifact(session, name.c_str(), content.slot()) == HTLAB_OK) {
      write_atomic(opt.out_dir, name, content.str(), stage);
    }
  }

  if (run_status != HTLAB_OK) {
    if (stage == "validate") {
      ApiString doc;
      if (htlab_session_artifact(session, "validation.json", doc.slot()) == HTLAB_OK) {
        std::cout << doc.str();
        return exit_code_of(run_status);
      }
    }
    throw_api(run_status, stage, run_error);
  }

  if (stage == "validate") {
    ApiString doc;
    if (htlab_session_artifact(session, "validation.json", doc.slot()) == HTLAB_OK) {
      std::cout << doc.str();
    }
    return 0;
  }
  json summary;
  summary["stage"] = stage;
  summary["status"] = "ok";
  summary["out"] = opt.out_dir;
  summary["artifacts"] = names;
  std::cout << summary.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  Options opt;
  std::string stage;

  CLI::App app{"Numerical laboratory for affine stochastic recursions"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(htlab_version()));

  const auto add_stage = [&](const std::string& name, const std::string& description) {
    CLI::App* sub = app.add_subcommand(name, description);
    sub->add_option("--config", opt.config_path, "config document (JSON)")
        ->required();
    sub->add_option("--out", opt.out_dir, "output directory (default: .)");
    sub->add_option("--threads", opt.threads, "worker threads (0 = all cores)")
        ->check(CLI::NonNegativeNumber)
        ->each([&](const std::string&) { opt.threads_set = true; });
    sub->add_option("--seed", opt.seed, "seed override")
        ->each([&](const std::string&) { opt.seed_set = true; });
    sub->callback([&, name] { stage = name; });
    return sub;
  };

  add_stage("validate", "check the measure document and report acceptance");
  add_stage("spectral", "Lyapunov exponent, moment function, tail exponent, direction measure");
  add_stage("sample", "stationary samples by truncated backward series");
  add_stage("tails", "Hill, radial and directional tails, angular measure");
  add_stage("structure", "word enumeration, fixed points, proximality, classification");
  add_stage("report", "all stages plus the invariant check table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;  // usage problems are configuration problems
  }

  try {
    return run_stage(opt, stage);
  } catch (const CliError& e) {
    std::cout << e.diagnostic.dump(2) << "\n";
    return e.exit_code;
  } catch (const std::exception& e) {
    std::cout << json({{"stage", stage}, {"code", "Internal"}, {"message", e.what()}}).dump(2)
              << "\n";
    return 4;
  }
}
