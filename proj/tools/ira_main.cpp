#include <CLI11.hpp>
#include <iostream>

#include "ira/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Data-driven reachability with interpolated multi-resolution chains"};
  app.require_subcommand(1);

  ira::cli::CommandOptions opt;
  std::string method;
  int workers = 0;
  std::uint64_t seed = 0;
  std::string out;
  std::string calibration;
  std::string config;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON configuration or a run manifest");
    sub->add_option("--workers", workers, "Phase-2 worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--seed", seed, "data seed");
    sub->add_option("--out", out, "output directory");
    sub->add_option("--calibration", calibration, "calibration record (calibration.json)");
  };

  auto* reach = app.add_subcommand("reach", "compute one reachable-set chain");
  add_common(reach);
  reach->add_option("--method", method, "dd | ira | ta-ira | mb")
      ->check(CLI::IsMember({"dd", "ira", "ta-ira", "mb"}));

  auto* sweep = app.add_subcommand("sweep", "runtime and width ratios over K and Ns");
  add_common(sweep);
  sweep->add_option("--k-range", opt.k_range, "comma-separated K values")->delimiter(',');
  sweep->add_option("--ns-range", opt.ns_range, "comma-separated Ns values")->delimiter(',');

  add_common(app.add_subcommand("calibrate", "conformal calibration and coverage report"));
  add_common(app.add_subcommand("ablation", "IRA-seq / IRA-par / TA-IRA / fine DD comparison"));
  add_common(app.add_subcommand("sensitivity", "step-size sensitivity of data-driven and model-based chains"));
  add_common(app.add_subcommand("export-training", "write training pairs for the surrogate"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : ira::cli::kExitConfig;
  }

  auto* sub = app.get_subcommands().front();
  if (sub->count("--config")) opt.config = config;
  if (sub->count("--workers")) opt.workers = workers;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--calibration")) opt.calibration = calibration;
  if (sub->get_name() == "reach" && sub->count("--method")) opt.method = method;

  return ira::cli::run_command(sub->get_name(), opt, std::cerr);
}
