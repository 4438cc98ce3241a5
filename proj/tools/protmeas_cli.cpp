// protmeas command-line front end.
//
//   protmeas run <config> [--seed N] [--out PATH] [--format csv|json] [--threads N]
//   protmeas validate <config>
//   protmeas list-experiments
//
// Exit status: 0 success, 1 validation error, 2 runtime integrity error.

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "protmeas/errors.hpp"
#include "protmeas/result_bundle.hpp"
#include "protmeas/scenario_config.hpp"
#include "protmeas/scenario_runner.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kValidation = 1;
constexpr int kRuntime = 2;

void report(const protmeas::ValidationError& e) {
  std::cerr << "validation failed:\n";
  for (const auto& d : e.diagnostics()) std::cerr << "  " << d << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Protective measurement simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  std::string out = ".";
  std::string format = "json";

  CLI::App* run = app.add_subcommand("run", "run the experiment described by a config file");
  run->add_option("config", config_path, "scenario .ini file")->required();
  run->add_option("--seed", seed, "override run.seed");
  run->add_option("--out", out, "output directory (csv) or file/directory (json)");
  run->add_option("--format", format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
  run->add_option("--threads", threads, "worker threads")->check(CLI::Range(1u, 1024u));

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config file without running it");
  validate->add_option("config", validate_path, "scenario .ini file")->required();

  CLI::App* list = app.add_subcommand("list-experiments", "list the available experiments");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (list->parsed()) {
      for (const auto& info : protmeas::list_experiments()) std::cout << info.name << "  " << info.title << "\n";
      return kOk;
    }
    if (validate->parsed()) {
      const auto cfg = protmeas::ScenarioConfig::from_file(validate_path);
      std::cout << "ok " << cfg.experiment() << " hash " << cfg.hash() << "\n";
      return kOk;
    }
    auto cfg = protmeas::ScenarioConfig::from_file(config_path);
    if (seed) cfg.set_seed(*seed);
    if (threads) cfg.set_threads(*threads);
    const auto bundle = protmeas::run_scenario(cfg);
    const auto fmt = format == "csv" ? protmeas::Format::Csv : protmeas::Format::Json;
    for (const auto& path : protmeas::emit(bundle, fmt, out)) std::cout << path << "\n";
    return kOk;
  } catch (const protmeas::ValidationError& e) {
    report(e);
    return kValidation;
  } catch (const protmeas::ConfigurationError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return kRuntime;
  }
}
