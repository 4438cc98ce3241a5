#include <gtest/gtest.h>

#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "protmeas/errors.hpp"
#include "protmeas/result_bundle.hpp"
#include "protmeas/scenario_config.hpp"
#include "protmeas/scenario_runner.hpp"

using namespace protmeas;
namespace fs = std::filesystem;

namespace {

std::string config_path(const std::string& name) { return std::string(PROTMEAS_CONFIG_DIR) + "/" + name + ".ini"; }

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("protmeas_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(PROTMEAS_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

const char* kMinimal = "[experiment]\nname = E6\n[run]\nseed = 3\n";

}  // namespace

TEST(Config, MinimalConfigFillsDefaults) {
  const ScenarioConfig c = ScenarioConfig::from_string(kMinimal);
  EXPECT_EQ(c.experiment(), "E6");
  EXPECT_EQ(c.seed(), 3u);
  EXPECT_EQ(c.integer("run.trials"), 1);
  EXPECT_DOUBLE_EQ(c.real("measurement.delta"), 0.1);
  EXPECT_EQ(c.integers("measurement.targets").size(), 16u);
  EXPECT_EQ(c.integers("measurement.targets").front(), 24);
}

TEST(Config, CommentsAndListsParse) {
  const ScenarioConfig c = ScenarioConfig::from_string(
      "; comment\n[experiment]\nname = E2\n# another\n[measurement]\nepsilons = 0.01, 0.001\ntargets = 1, 3:5\n"
      "[run]\nseed = 9\n");
  EXPECT_EQ(c.reals("measurement.epsilons"), (std::vector<double>{0.01, 0.001}));
  EXPECT_EQ(c.integers("measurement.targets"), (std::vector<std::int64_t>{1, 3, 4, 5}));
}

TEST(Config, ZeroTrialsIsValidationError) {
  try {
    ScenarioConfig::from_string("[experiment]\nname = E2\n[run]\nseed = 1\ntrials = 0\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    ASSERT_EQ(e.diagnostics().size(), 1u);
    EXPECT_NE(e.diagnostics()[0].find("[run] trials"), std::string::npos);
  }
}

TEST(Config, FieldLevelDiagnosticsAreCollected) {
  try {
    ScenarioConfig::from_string(
        "[experiment]\nname = E9\n[system]\nomega = fast\ncolour = red\n[bogus]\nx = 1\n[measurement]\ndelta = -1\n");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    std::string all;
    for (const auto& d : e.diagnostics()) all += d + "\n";
    EXPECT_NE(all.find("[system] omega"), std::string::npos) << all;
    EXPECT_NE(all.find("[system] colour: unknown key"), std::string::npos) << all;
    EXPECT_NE(all.find("[bogus]: unknown section"), std::string::npos) << all;
    EXPECT_NE(all.find("[run] seed: required"), std::string::npos) << all;
  }
  EXPECT_THROW(ScenarioConfig::from_string("[experiment]\nname = E9\n[run]\nseed = 1\n"), ValidationError);
  EXPECT_THROW(ScenarioConfig::from_string("[experiment]\nname = E1\n[run]\nseed = -4\n"), ValidationError);
  EXPECT_THROW(ScenarioConfig::from_string("[experiment]\nname = E1\n[measurement]\npointer_points = 256\n[run]\nseed = 1\n"),
               ValidationError);
}

TEST(Config, HashIgnoresSeedAndThreads) {
  ScenarioConfig a = ScenarioConfig::from_string(kMinimal);
  ScenarioConfig b = ScenarioConfig::from_string(kMinimal);
  b.set_seed(99);
  b.set_threads(4);
  EXPECT_EQ(a.hash(), b.hash());
  EXPECT_EQ(a.hash().size(), 16u);
  const ScenarioConfig c = ScenarioConfig::from_string("[experiment]\nname = E6\n[system]\nalpha = 0.5\n[run]\nseed = 3\n");
  EXPECT_NE(a.hash(), c.hash());
  EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
  EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(Config, ShippedConfigsValidate) {
  for (const auto& info : list_experiments()) {
    const ScenarioConfig c = ScenarioConfig::from_file(config_path(info.name));
    EXPECT_EQ(c.experiment(), info.name);
  }
  EXPECT_EQ(list_experiments().size(), 8u);
}

TEST(Bundle, NumberFormattingIsShortestRoundTrip) {
  EXPECT_EQ(format_number(0.1), "0.10000000000000001");
  EXPECT_EQ(format_number(1.0), "1");
  EXPECT_EQ(format_number(-2.5e-10), "-2.5000000000000002e-10");
  EXPECT_EQ(format_number(std::nan("")), "nan");
  EXPECT_EQ(std::stod(format_number(1.0 / 3.0)), 1.0 / 3.0);
}

TEST(Bundle, EmptyTableIsHeaderOnly) {
  Table t{"empty", {"a", "b"}, {}};
  EXPECT_EQ(to_csv(t), "a,b\n");
  EXPECT_THROW(t.add({1.0}), StructuralError);
}

TEST(Bundle, CsvQuotesAndTerminatesRows) {
  Table t{"t", {"name", "value"}, {}};
  t.add({std::string("x,y"), 2.0});
  t.add({std::string("say \"hi\""), std::int64_t{3}});
  EXPECT_EQ(to_csv(t), "name,value\n\"x,y\",2\n\"say \"\"hi\"\"\",3\n");
}

TEST(Bundle, JsonRoundTripIsExactAndKeysSorted) {
  ResultBundle b;
  b.experiment = "EX";
  b.metadata["zeta"] = "last";
  b.metadata["alpha"] = "first";
  b.summary["pi"] = 3.141592653589793;
  b.summary["tiny"] = 1.2345678901234567e-300;
  b.summary["count"] = std::int64_t{42};
  b.summary["bad"] = std::nan("");
  Table& t = b.table("zz", {"x", "label"});
  t.add({0.1, std::string("a")});
  t.add({2.0 / 3.0, std::string("b")});
  b.table("aa", {"v"}).add({-1e-17});
  const auto j = nlohmann::json::parse(to_json(b));
  EXPECT_EQ(j["summary"]["pi"].get<double>(), 3.141592653589793);
  EXPECT_EQ(j["summary"]["tiny"].get<double>(), 1.2345678901234567e-300);
  EXPECT_EQ(j["summary"]["count"].get<std::int64_t>(), 42);
  EXPECT_TRUE(j["summary"]["bad"].is_null());
  EXPECT_EQ(j["tables"]["zz"]["rows"][1][0].get<double>(), 2.0 / 3.0);
  EXPECT_EQ(j["tables"]["aa"]["rows"][0][0].get<double>(), -1e-17);
  const std::string text = to_json(b);
  EXPECT_LT(text.find("\"aa\""), text.find("\"zz\""));
  EXPECT_LT(text.find("\"alpha\""), text.find("\"zeta\""));
  EXPECT_EQ(payload(b).find("wall_clock"), std::string::npos);
}

TEST(Bundle, EmitReportsPathOnFailure) {
  ResultBundle b;
  b.experiment = "EX";
  try {
    emit(b, Format::Json, "/nonexistent_dir_for_test/out.json");
    FAIL() << "expected Error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent_dir_for_test"), std::string::npos);
  }
}

TEST(Bundle, EmitCsvWritesOneFilePerTable) {
  ResultBundle b;
  b.experiment = "EX";
  b.table("one", {"a"}).add({1.0});
  b.table("two", {"b"});
  b.summary["k"] = 1.5;
  const fs::path dir = scratch_dir("csv");
  const auto files = emit(b, Format::Csv, dir.string());
  EXPECT_EQ(files.size(), 3u);
  EXPECT_EQ(slurp(dir / "EX_one.csv"), "a\n1\n");
  EXPECT_EQ(slurp(dir / "EX_two.csv"), "b\n");
  EXPECT_NE(slurp(dir / "EX_summary.csv").find("k,1.5\n"), std::string::npos);
}

TEST(Runner, IdenticalConfigGivesIdenticalPayload) {
  const ScenarioConfig c = ScenarioConfig::from_file(config_path("E6"));
  const ResultBundle a = run_scenario(c);
  const ResultBundle b = run_scenario(c);
  EXPECT_EQ(payload(a), payload(b));
  EXPECT_EQ(a.metadata.at("config_hash"), c.hash());
  EXPECT_EQ(a.metadata.at("seed"), std::to_string(c.seed()));
  EXPECT_FALSE(a.metadata.at("code_version").empty());
}

TEST(Runner, SurvivalSweepIndependentOfThreads) {
  ScenarioConfig c = ScenarioConfig::from_string(
      "[experiment]\nname = E2\n[measurement]\nepsilons = 0.02, 0.01\n[run]\ntrials = 2000\nseed = 17\nthreads = 1\n");
  const std::string one = payload(run_scenario(c));
  c.set_threads(3);
  EXPECT_EQ(payload(run_scenario(c)), one);
  c.set_seed(18);
  EXPECT_NE(payload(run_scenario(c)), one);
}

TEST(Runner, SurvivalTableColumnsAndPrediction) {
  const ScenarioConfig c = ScenarioConfig::from_string(
      "[experiment]\nname = E2\n[measurement]\nepsilons = 0.01\n[run]\ntrials = 1000\nseed = 1\n");
  const ResultBundle b = run_scenario(c);
  const Table* t = b.find("survival");
  ASSERT_NE(t, nullptr);
  EXPECT_EQ(t->columns, (std::vector<std::string>{"epsilon", "delta", "trials", "survived", "predicted"}));
  EXPECT_NEAR(std::get<double>(t->rows[0][4]), std::pow(0.99, 100), 1e-15);
}

TEST(Runner, PhaseRecovery) {
  const ResultBundle b = run_scenario(ScenarioConfig::from_file(config_path("E4")));
  EXPECT_LT(b.number("max_error"), 1e-2);
  EXPECT_EQ(b.number("regions"), 1.0);
}

TEST(Runner, TwoStateProtection) {
  const ResultBundle b = run_scenario(ScenarioConfig::from_file(config_path("E7")));
  EXPECT_GT(b.number("min_forward_fidelity"), 0.99);
  EXPECT_GT(b.number("min_backward_fidelity"), 0.99);
  EXPECT_GT(b.number("pair_distinctness"), 0.05);
  EXPECT_GT(b.number("hermitian_coincident_min_fidelity"), 0.99);
  EXPECT_LT(b.number("hermitian_distinct_min_backward"), 0.9);
}

TEST(Runner, TrackingFollowsSlowDriftOnly) {
  const ResultBundle b = run_scenario(ScenarioConfig::from_file(config_path("E8")));
  EXPECT_LT(b.number("slow_relative_error"), 0.1);
  EXPECT_EQ(b.number("slow_warning"), 0.0);
  EXPECT_EQ(b.number("fast_warning"), 1.0);
  EXPECT_GT(b.number("fast_relative_error"), 0.1);
}

TEST(Runner, OutputsFilterTables) {
  ScenarioConfig c = ScenarioConfig::from_string(
      "[experiment]\nname = E6\n[run]\nseed = 2\ntrials = 10\noutputs = bell\n");
  const ResultBundle b = run_scenario(c);
  ASSERT_EQ(b.tables.size(), 1u);
  EXPECT_EQ(b.tables[0].name, "bell");
  const ScenarioConfig bad = ScenarioConfig::from_string(
      "[experiment]\nname = E6\n[run]\nseed = 2\noutputs = nothing\n");
  EXPECT_THROW(run_scenario(bad), ValidationError);
}

TEST(Runner, ExperimentMismatchSurfacesAsValidationError) {
  // E5 needs exactly one target.
  const ScenarioConfig c = ScenarioConfig::from_string(
      "[experiment]\nname = E5\n[system]\ngrid_points = 32\n[measurement]\ntargets = 3, 4\n[postselection]\nkind = both\n"
      "[run]\nseed = 1\n");
  try {
    run_scenario(c);
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.diagnostics()[0].rfind("E5: ", 0), 0u);
  }
}

TEST(Cli, ExitCodes) {
  const fs::path dir = scratch_dir("cli");
  EXPECT_EQ(run_cli("list-experiments"), 0);
  EXPECT_EQ(run_cli("validate " + config_path("E6")), 0);
  EXPECT_EQ(run_cli("run " + config_path("E6") + " --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "E6.json"));
  EXPECT_EQ(run_cli("run " + config_path("E6") + " --format csv --seed 5 --threads 2 --out " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "E6_bell.csv"));

  const fs::path bad = dir / "bad.ini";
  std::ofstream(bad) << "[experiment]\nname = E2\n[run]\nseed = 1\ntrials = 0\n";
  EXPECT_EQ(run_cli("validate " + bad.string()), 1);
  EXPECT_EQ(run_cli("run " + bad.string()), 1);
  EXPECT_EQ(run_cli("run " + config_path("E6") + " --format xml"), 1);
  EXPECT_EQ(run_cli("validate /nonexistent.ini"), 1);
  // Unwritable destination is a runtime failure.
  EXPECT_EQ(run_cli("run " + config_path("E6") + " --out /nonexistent_dir_for_test/x.json"), 2);
}

TEST(Cli, SeedOverrideChangesOnlySeededOutput) {
  const fs::path dir = scratch_dir("seed");
  ASSERT_EQ(run_cli("run " + config_path("E6") + " --seed 11 --out " + (dir / "a.json").string()), 0);
  ASSERT_EQ(run_cli("run " + config_path("E6") + " --seed 11 --threads 3 --out " + (dir / "b.json").string()), 0);
  auto a = nlohmann::json::parse(slurp(dir / "a.json"));
  auto b = nlohmann::json::parse(slurp(dir / "b.json"));
  a["metadata"].erase("wall_clock_seconds");
  b["metadata"].erase("wall_clock_seconds");
  EXPECT_EQ(a, b);
  EXPECT_EQ(a["metadata"]["seed"], "11");
}
