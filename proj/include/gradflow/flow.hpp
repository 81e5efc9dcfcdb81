#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "gradflow/grid.hpp"
#include "gradflow/measure.hpp"
#include "gradflow/potential.hpp"
#include "gradflow/trace.hpp"

namespace gradflow {

enum class FlowKind { kFR, kW, kWFR, kFRExact };

std::string_view to_string(FlowKind kind);
// Accepts "FR", "W", "WFR", "FR_exact".
FlowKind parse_flow_kind(std::string_view name);

// The target energy v_* and its analytic derivatives sampled on a grid.
struct TargetField {
  std::vector<double> v;
  std::vector<double> grad;
  std::vector<double> lap;

  static TargetField sample(const Potential& target, const Grid& grid);
};

// Thrown when an iterate stops being finite. For W/WFR this usually means the
// step size violates the diffusion stability limit.
class FlowDivergence : public std::runtime_error {
 public:
  FlowDivergence(const std::string& what, double time) : std::runtime_error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

// Explicit-Euler state of a PDE flow: the log-density iterate x and its clock.
// FR and WFR renormalize x after every step; W keeps the raw iterate unless
// `renormalize` is set, and mass_drift() reports how far its mass wandered.
class FlowState {
 public:
  FlowState(FlowKind kind, const LogDensity& init, double step_size, bool renormalize);
  FlowState(FlowKind kind, const LogDensity& init, double step_size);

  FlowKind kind() const { return kind_; }
  const Grid& grid() const { return grid_; }
  std::span<const double> x() const { return x_; }
  double step_size() const { return step_; }
  std::uint64_t steps() const { return steps_; }
  // Exactly steps() * step_size().
  double time() const { return static_cast<double>(steps_) * step_; }
  bool renormalizes() const { return renormalize_; }

  double mass() const;
  // Accumulated |1 - mass| seen before each renormalization, plus the current
  // |1 - mass| when the state is not renormalized.
  double mass_drift() const;

  // Normalized copy of the iterate (a plain copy for renormalized kinds).
  LogDensity density() const;

 private:
  friend void fr_step(FlowState&, std::span<const double>);
  friend void w_step(FlowState&, std::span<const double>, std::span<const double>);
  friend void wfr_step(FlowState&, std::span<const double>, std::span<const double>,
                       std::span<const double>);
  void finish_step(bool renormalize);

  FlowKind kind_;
  Grid grid_;
  std::vector<double> x_;
  std::vector<double> scratch_;
  double step_;
  std::uint64_t steps_ = 0;
  bool renormalize_;
  double drift_ = 0.0;
};

// x~ = x + eps(-v_* - x), then x = x~ - log sum exp(x~) - log h.
void fr_step(FlowState& state, std::span<const double> v_star);

// x = x + eps(lap v_* + lap x + (grad v_* + grad x) grad x) with periodic
// central stencils.
void w_step(FlowState& state, std::span<const double> grad_v, std::span<const double> lap_v);

// Sum of the FR and W increments followed by the FR renormalization.
void wfr_step(FlowState& state, std::span<const double> v_star, std::span<const double> grad_v,
              std::span<const double> lap_v);

// Explicit Euler for the diffusion stencil is stable for eps <= h^2 / 2.
double cfl_limit(const Grid& grid);

// Throws std::invalid_argument for W/WFR step sizes above cfl_limit unless forced.
void check_cfl(FlowKind kind, double step_size, const Grid& grid, bool force);

// Geometric annealing path: logp ∝ tau logp_pi + (1 - tau) logp_rho0.
LogDensity annealing_path(const LogDensity& rho0, const LogDensity& pi, double tau);

// Exact Fisher-Rao solution: the annealing path at tau = 1 - e^{-t}.
LogDensity fr_exact(const LogDensity& rho0, const LogDensity& pi, double t);

struct FlowRunConfig {
  FlowKind kind = FlowKind::kFR;
  Potential target;
  Potential init;
  std::size_t n = 2000;
  double step_size = 1e-6;  // ignored for FR_exact
  double horizon = 1.0;
  double record_dt = 0.01;
  std::vector<double> q_list;
  bool renormalize_w = false;
  bool force_cfl = false;
  // Additional times (e.g. slope-window endpoints) to record, within [0, horizon].
  std::vector<double> extra_record_times;
  // Called after every PDE step.
  std::function<void(const FlowState&)> on_step;
};

// Rows at t = 0, record_dt, 2 record_dt, ..., horizon, plus extra_record_times.
// PDE rows sit at the nearest whole step, t = k * eps.
FlowTrace run(const FlowRunConfig& config);

// Thrown by run() when a step fails; carries the rows recorded so far.
class FlowRunError : public FlowDivergence {
 public:
  FlowRunError(const FlowDivergence& cause, FlowTrace partial)
      : FlowDivergence(cause.what(), cause.time()), partial_(std::move(partial)) {}
  const FlowTrace& partial() const { return partial_; }

 private:
  FlowTrace partial_;
};

}  // namespace gradflow
