#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "piag/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Proximal incremental aggregated gradient experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  piag::RunFlags flags;
  app.add_flag("--quiet", flags.quiet, "Suppress the console report");
  app.add_flag("--trace-iterates", flags.trace_iterates, "Append x_k columns to the CSV trace");

  std::string run_config;
  auto* run = app.add_subcommand("run", "Run one experiment from a JSON config");
  run->add_option("config", run_config, "Experiment config (JSON)")->required();

  std::string rates_config;
  auto* rates = app.add_subcommand("compare-rates", "Tabulate contraction factors over an (eta, tau) grid");
  rates->add_option("config", rates_config, "Grid config (JSON)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return piag::kExitConfigError;
  }

  if (*run) return piag::run_command(run_config, flags, std::cout, std::cerr);
  return piag::compare_rates_command(rates_config, flags, std::cout, std::cerr);
}
