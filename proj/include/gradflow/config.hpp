#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gradflow/flow.hpp"
#include "gradflow/potential.hpp"
#include "json.hpp"

namespace gradflow {

// All violations found while validating a config, reported together.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

struct SlopeWindow {
  double t1 = 0.0;
  double t2 = 0.0;
};

// One experiment: a target, a set of initializations, and the flows to run
// from each of them. Per-flow values (step size, horizon, slope window) are
// keyed by flow kind.
struct ExperimentConfig {
  std::string name;
  Potential target;
  std::vector<Potential> inits;
  std::vector<FlowKind> flows;
  std::size_t n = 2000;
  std::map<FlowKind, double> step_size;
  std::map<FlowKind, double> horizon;
  double record_dt = 0.01;
  std::vector<double> q_list{2.0};
  std::map<FlowKind, SlopeWindow> slope_windows;
  int cumulant_order = 8;
  std::string output_dir = "out";
  bool w_renormalize = false;
  bool force_cfl = false;
  double alpha = 0.0;

  double max_horizon() const;

  // Everything that affects computed numbers, in canonical form: potentials
  // as sorted term lists, only the entries of listed flows, no labels or paths.
  nlohmann::json canonical() const;
  // FNV-1a 64 of canonical().dump(), as 16 hex digits.
  std::string hash() const;

  FlowRunConfig run_config(FlowKind kind, const Potential& init) const;
};

// Throws ConfigError listing every problem found.
ExperimentConfig parse_config(const nlohmann::json& doc);
// `overrides` is merge-patched into the file contents before validation.
ExperimentConfig load_config(const std::filesystem::path& path,
                             const nlohmann::json& overrides = nlohmann::json::object());

std::string hex64(std::uint64_t value);

}  // namespace gradflow
