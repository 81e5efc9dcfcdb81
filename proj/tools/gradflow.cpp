#include <cstdlib>
#include <iostream>

#include "CLI11.hpp"
#include "gradflow/commands.hpp"

int main(int argc, char** argv) {
  using namespace gradflow;

  CLI::App app{"gradflow: Fisher-Rao, Wasserstein and WFR gradient flows of the KL divergence on the circle"};
  app.require_subcommand(1);

  CommandOptions common;
  std::string out_dir;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", common.config, "Experiment config (JSON)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output_dir)");
    sub->add_flag("--force-cfl", common.force_cfl, "Run even when a step size violates the CFL guard");
  };

  auto* run = app.add_subcommand("run", "Run every (flow, init) pair and write traces, slopes and reports");
  add_common(run);
  run->add_option("--workers", common.workers, "Concurrent runs")->check(CLI::PositiveNumber);

  auto* predict = app.add_subcommand("predict", "Cumulants, predicted KL curves and assumption diagnostics");
  add_common(predict);

  PlotOptions plot_opts;
  std::string plot_config;
  auto* plot = app.add_subcommand("plot", "Render trace or prediction CSVs to SVG");
  plot->add_option("files", plot_opts.inputs, "Trace or prediction CSV files");
  plot->add_option("--out", plot_opts.out, "Output SVG path");
  plot->add_option("--title", plot_opts.title, "Plot title");
  plot->add_option("--column", plot_opts.column, "Column to plot (kl, chi2, renyi_q2, ...)");
  plot->add_flag("--energy", plot_opts.energy, "Plot the potentials of --config instead of traces");
  plot->add_option("--config", plot_config, "Experiment config, for --energy");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  if (const char* seed = std::getenv("GRADFLOW_SEED")) {
    std::cerr << "warning: GRADFLOW_SEED=" << seed
              << " ignored; every computation is deterministic\n";
  }

  if (!out_dir.empty()) common.out = out_dir;
  if (*run) return cmd_run(common, std::cerr);
  if (*predict) return cmd_predict(common, std::cerr);
  if (!plot_config.empty()) plot_opts.config = plot_config;
  return cmd_plot(plot_opts, std::cerr);
}
