#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace gradflow {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitRuntime = 3 };

struct CommandOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out;  // overrides output_dir
  int workers = 1;
  bool force_cfl = false;
};

// Runs every (flow, init) pair of the config and writes traces, slopes,
// residual reports, a KL figure and manifest.json (last).
int cmd_run(const CommandOptions& options, std::ostream& log);

// Cumulant tables, predicted KL/Renyi curves and assumption diagnostics.
int cmd_predict(const CommandOptions& options, std::ostream& log);

struct PlotOptions {
  std::vector<std::filesystem::path> inputs;
  std::filesystem::path out = "plot.svg";
  std::string title;
  std::string column = "kl";
  // Energy mode plots the potentials of `config` on a linear axis.
  bool energy = false;
  std::optional<std::filesystem::path> config;
};

int cmd_plot(const PlotOptions& options, std::ostream& log);

// File-name safe version of a label.
std::string sanitize_label(const std::string& label);
std::string trace_file_name(std::string_view flow, const std::string& init);

}  // namespace gradflow
