#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "zoopt/cli.hpp"

int main(int argc, char** argv) {
  namespace zc = zoopt::cli;

  CLI::App app{"Zeroth-order optimizer and verification harness"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::optional<std::size_t> threads;
  bool timing = false;
  app.add_option("--config", config_path, "Experiment config (JSON)");
  app.add_option("--seed", seed, "Master seed; overrides the config");
  app.add_option("--out", out_dir, "Output directory; overrides config.output");
  app.add_option("--threads", threads, "Worker threads (default: $ZOO_OPT_THREADS or 1)");
  app.add_flag("--timing", timing, "Fill the wall_ms column (breaks byte-identical output)");

  auto* optimize = app.add_subcommand("optimize", "Run the two-stage optimizer per trial");
  auto* verify = app.add_subcommand("verify", "Run a named check suite");
  std::string check;
  verify->add_option("check", check, "bias | variance | concentration | step-stability | newton | "
                                     "noise-tail | lower-bound")
      ->required();
  auto* sweep = app.add_subcommand("regret-sweep", "Mean regret over a (d, T) grid with slope fits");
  auto* audit = app.add_subcommand("audit-lower-bound", "Audit the hard-instance construction");
  for (auto* sub : {optimize, verify, sweep, audit}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : zc::kConfigError;
  }

  std::string command;
  for (auto* sub : {optimize, verify, sweep, audit}) {
    if (sub->parsed()) command = sub->get_name();
  }

  zc::ExperimentConfig config;
  zc::Options opt;
  try {
    if (!config_path.empty()) {
      config = zc::load_config(config_path);
    }
    if (config.command.empty()) config.command = command;
    if (config.command != command) {
      throw zoopt::ConfigError("config is for '" + config.command + "', not '" + command + "'");
    }
    opt.seed = seed;
    opt.threads = zc::resolve_threads(threads, std::getenv("ZOO_OPT_THREADS"));
    opt.timing = timing;
    if (!out_dir.empty()) {
      opt.out_dir = out_dir;
    } else if (config.output) {
      opt.out_dir = *config.output;
    }
  } catch (const zoopt::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return zc::kConfigError;
  }

  std::optional<std::string> check_name;
  if (verify->parsed()) check_name = check;
  return zc::dispatch(command, config, check_name, opt);
}
