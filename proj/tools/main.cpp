#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "issp/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Stochastic ISS certificates, probability bounds and Monte Carlo validation"};
  app.require_subcommand(1);

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  unsigned threads = 1;
  bool quiet = false;

  CLI::App* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--seed", seed, "Override the master seed");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--threads", threads, "Worker threads; 0 uses all cores. Results do not depend on it")
      ->check(CLI::NonNegativeNumber);
  run->add_flag("--quiet", quiet, "Suppress the summary table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : issp::kExitValidation;
  }

  issp::RunOptions options;
  options.seed = seed;
  options.out_dir = out_dir;
  options.threads = threads;
  options.quiet = quiet;
  return issp::run_config_file(config_path, options, std::cout, std::cerr);
}
