// causalmem command-line harness: validate datasets, generate fixtures, run
// agent evaluations, and rebuild reports from run directories.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>

#include "causalmem/dataset.hpp"
#include "causalmem/harness.hpp"
#include "causalmem/live.hpp"
#include "causalmem/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitConfig = 2;
constexpr int kExitEmptyDataset = 3;
constexpr int kExitBackend = 4;

int cmd_validate(const std::string& dataset_path, bool as_json) {
  causalmem::LoadResult result;
  try {
    result = causalmem::load_dataset(dataset_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (as_json) {
    causalmem::json out;
    out["accepted"] = result.accepted.size();
    causalmem::json rejected = causalmem::json::array();
    for (const auto& r : result.rejected) {
      rejected.push_back({{"line", r.line}, {"id", r.id}, {"reasons", r.reasons}});
    }
    out["rejected"] = std::move(rejected);
    out["stats"] = causalmem::stats_to_json(causalmem::dataset_stats(result.accepted));
    std::cout << out.dump(2) << '\n';
    return result.rejected.empty() ? kExitOk : kExitFailure;
  }
  std::cout << "accepted: " << result.accepted.size() << '\n';
  std::cout << "rejected: " << result.rejected.size() << '\n';
  for (const auto& r : result.rejected) {
    std::cout << "  line " << r.line << (r.id.empty() ? "" : " (id " + r.id + ")") << ":\n";
    for (const auto& reason : r.reasons) {
      std::cout << "    - " << reason << '\n';
    }
  }
  if (!result.accepted.empty()) {
    std::cout << '\n' << causalmem::stats_table(causalmem::dataset_stats(result.accepted));
  }
  return result.rejected.empty() ? kExitOk : kExitFailure;
}

int cmd_fixture(std::uint64_t seed, int n, double poison, const std::string& out_path) {
  const auto examples = causalmem::generate_fixture(seed, n, poison);
  if (out_path.empty() || out_path == "-") {
    std::cout << causalmem::serialize_examples(examples);
  } else {
    causalmem::save_dataset(out_path, examples);
    std::cout << "wrote " << examples.size() << " examples to " << out_path << '\n';
  }
  return kExitOk;
}

int cmd_run(const std::string& config_path) {
  causalmem::RunConfig config;
  try {
    config = causalmem::parse_run_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const auto problems = causalmem::validate_run_config(config);
  if (!problems.empty()) {
    std::cerr << "error: invalid config:\n";
    for (const auto& p : problems) std::cerr << "  - " << p << '\n';
    return kExitConfig;
  }

  std::unique_ptr<causalmem::ModelBackend> backend;
  std::unique_ptr<causalmem::ModelBackend> judge_backend;
  std::unique_ptr<causalmem::Embedder> embedder;
  causalmem::Services services;

  if (config.backend == causalmem::BackendKind::Oracle) {
    backend = std::make_unique<causalmem::OracleBackend>();
    embedder = std::make_unique<causalmem::HashedEmbedder>();
  } else {
    const auto env = causalmem::live_env_from_process();
    if (!env) {
      std::cerr << "error: live backend requires CM_API_KEY and CM_API_BASE\n";
      return kExitConfig;
    }
    causalmem::LiveBackendOptions options;
    options.backend_id = "live:" + env->model;
    options.cache_dir = config.cache_dir.empty()
                            ? std::filesystem::path(config.output_dir) / "cache"
                            : std::filesystem::path(config.cache_dir);
    backend = std::make_unique<causalmem::LiveBackend>(
        options, causalmem::make_http_transport(*env, env->model));
    embedder = std::make_unique<causalmem::LiveEmbedder>(*env);
    if (config.judge == causalmem::JudgeKind::Live) {
      // The judge runs on its own backend id so its cache entries never mix
      // with response-model entries.
      causalmem::LiveBackendOptions judge_options;
      judge_options.backend_id = "judge:" + env->judge_model;
      judge_options.cache_dir = *options.cache_dir;
      judge_backend = std::make_unique<causalmem::LiveBackend>(
          judge_options, causalmem::make_http_transport(*env, env->judge_model));
      services.judge = causalmem::make_backend_judge(*judge_backend);
    }
  }
  services.backend = backend.get();
  services.embedder = embedder.get();

  try {
    const auto summary = causalmem::run(config, services);
    std::cout << "run directory: " << summary.run_dir.string() << '\n';
    std::cout << "examples: " << summary.accepted_examples << " accepted, "
              << summary.rejected_examples << " rejected\n\n";
    std::ifstream table(summary.run_dir / "aggregates.txt");
    std::cout << table.rdbuf();
    return kExitOk;
  } catch (const causalmem::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const causalmem::EmptyDatasetError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitEmptyDataset;
  } catch (const causalmem::BackendError& e) {
    std::cerr << "error: backend failed after retries: " << e.what() << '\n';
    std::cerr << "partial results (marked PARTIAL) were kept in " << config.output_dir << '\n';
    return kExitBackend;
  }
}

int cmd_report(const std::string& run_dir) {
  try {
    const auto output = causalmem::report(run_dir);
    std::cout << "report written to " << output.report_dir.string() << '\n';
    if (!output.has_cmi_diagnostics) {
      std::cout << "note: no cmi records; diagnostics marked absent\n";
    }
    for (const auto& agent : output.missing_agents) {
      std::cout << "warning: aggregate present but records missing for agent " << agent << '\n';
    }
    std::ifstream table(output.report_dir / "main_table.txt");
    std::cout << '\n' << table.rdbuf();
    return kExitOk;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal intervention-based memory selection harness"};
  app.require_subcommand(1);

  std::string dataset_path;
  bool validate_json = false;
  auto* validate = app.add_subcommand("validate", "Validate a JSONL dataset file");
  validate->add_option("dataset", dataset_path, "dataset file")->required();
  validate->add_flag("--json", validate_json, "emit the report as JSON instead of text");

  std::uint64_t seed = 1;
  int n = 20;
  double poison = 0.5;
  std::string out_path;
  auto* fixture = app.add_subcommand("fixture", "Generate a synthetic benchmark fixture");
  fixture->add_option("--seed", seed, "generator seed");
  fixture->add_option("--n", n, "number of examples");
  fixture->add_option("--poison", poison, "fraction of poisoned examples in [0,1]");
  fixture->add_option("--out", out_path, "output file (default: stdout)");

  std::string config_path;
  auto* run = app.add_subcommand("run", "Run configured agents over a dataset");
  run->add_option("--config", config_path, "key = value config file")->required();

  std::string run_dir;
  auto* report = app.add_subcommand("report", "Rebuild tables and plot data from a run directory");
  report->add_option("run_dir", run_dir, "run directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (validate->parsed()) return cmd_validate(dataset_path, validate_json);
    if (fixture->parsed()) return cmd_fixture(seed, n, poison, out_path);
    if (run->parsed()) return cmd_run(config_path);
    if (report->parsed()) return cmd_report(run_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  return kExitOk;
}
