#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <catch2/catch_amalgamated.hpp>

#include "causalmem/dataset.hpp"
#include "test_support.hpp"

using test_support::fresh_temp_dir;

namespace {

int run_cli(const std::string& args) {
  const char* bin = std::getenv("CAUSALMEM_BIN");
  REQUIRE(bin != nullptr);
  const std::string command = std::string(bin) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(command.c_str());
  REQUIRE(status != -1);
  return WEXITSTATUS(status);
}

}  // namespace

TEST_CASE("cli end-to-end: fixture, validate, run, report") {
  const auto dir = fresh_temp_dir("cli");
  const auto dataset = (dir / "fixture.jsonl").string();
  const auto run_dir = (dir / "run").string();

  REQUIRE(run_cli("fixture --seed 1 --n 6 --poison 0.5 --out " + dataset) == 0);
  CHECK(causalmem::load_dataset(dataset).accepted.size() == 6);

  CHECK(run_cli("validate " + dataset) == 0);

  const auto config_path = (dir / "run.conf").string();
  {
    std::ofstream out(config_path);
    out << "dataset = " << dataset << "\n"
        << "agents = all\n"
        << "backend = oracle\n"
        << "output_dir = " << run_dir << "\n"
        << "seed = 1\n";
  }
  CHECK(run_cli("run --config " + config_path) == 0);
  CHECK(std::filesystem::exists(std::filesystem::path(run_dir) / "aggregates.txt"));

  CHECK(run_cli("report " + run_dir) == 0);
  CHECK(std::filesystem::exists(std::filesystem::path(run_dir) / "report" / "tradeoff.csv"));
}

TEST_CASE("cli exit codes distinguish failure classes") {
  const auto dir = fresh_temp_dir("cli_err");

  SECTION("validate flags a rejected dataset with exit 1") {
    // A leakage-violating single example.
    auto example = test_support::make_basic_example();
    example.bank.entries[2].text = "the adoption date is actually 21 May 2023";
    const auto dataset = (dir / "bad.jsonl").string();
    causalmem::save_dataset(dataset, {example});
    CHECK(run_cli("validate " + dataset) == 1);
  }
  SECTION("invalid config exits 2") {
    const auto config_path = (dir / "broken.conf").string();
    {
      std::ofstream out(config_path);
      out << "dataset = \n";  // missing required fields
    }
    CHECK(run_cli("run --config " + config_path) == 2);
  }
  SECTION("a live judge over the oracle backend exits 2") {
    const auto dataset = (dir / "ok.jsonl").string();
    causalmem::save_dataset(dataset, causalmem::generate_fixture(1, 2, 0.0));
    const auto config_path = (dir / "judge.conf").string();
    {
      std::ofstream out(config_path);
      out << "dataset = " << dataset << "\nbackend = oracle\njudge = live\n"
          << "output_dir = " << (dir / "r").string() << "\n";
    }
    CHECK(run_cli("run --config " + config_path) == 2);
  }
  SECTION("an empty dataset exits 3") {
    const auto dataset = (dir / "empty.jsonl").string();
    std::ofstream(dataset).close();
    const auto config_path = (dir / "empty.conf").string();
    {
      std::ofstream out(config_path);
      out << "dataset = " << dataset << "\nbackend = oracle\n"
          << "output_dir = " << (dir / "r").string() << "\n";
    }
    CHECK(run_cli("run --config " + config_path) == 3);
  }
}
