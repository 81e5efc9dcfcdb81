#include "gradflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>

#include "kernels.hpp"

namespace gradflow {
namespace {

// One explicit-Euler update of the log-density written into `out`.
// kBirthDeath adds the Fisher-Rao term -v - x; kTransport adds the
// Fokker-Planck term lap v + lap x + (grad v + grad x) grad x.
template <bool kBirthDeath, bool kTransport>
void euler_update(std::span<const double> x, std::span<double> out, double eps, double h,
                  const double* v, const double* grad_v, const double* lap_v) {
  const std::size_t n = x.size();
  const double inv_2h = 1.0 / (2.0 * h);
  const double inv_h2 = 1.0 / (h * h);
  auto cell = [&](std::size_t i, double left, double right) {
    const double xi = x[i];
    double inc = 0.0;
    if constexpr (kBirthDeath) inc = -v[i] - xi;
    if constexpr (kTransport) {
      const double g = (right - left) * inv_2h;
      const double l = (right + left - 2.0 * xi) * inv_h2;
      inc += lap_v[i] + l + (grad_v[i] + g) * g;
    }
    out[i] = xi + eps * inc;
  };
  cell(0, x[n - 1], x[1]);
  for (std::size_t i = 1; i + 1 < n; ++i) cell(i, x[i - 1], x[i + 1]);
  cell(n - 1, x[n - 2], x[0]);
}

void require_kind(const FlowState& s, FlowKind expected, const char* what) {
  if (s.kind() != expected) {
    throw std::invalid_argument(std::string(what) + " called on a " + std::string(to_string(s.kind())) +
                                " state");
  }
}

void require_fields(const FlowState& s, std::initializer_list<std::span<const double>> fields,
                    const char* what) {
  for (auto f : fields) require_grid_size(s.grid(), f, what);
}

std::string time_string(double t) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", t);
  return buf;
}

LogDensity mixture(const LogDensity& rho0, const LogDensity& pi, double w_rho0, double w_pi) {
  require_same_grid(rho0, pi, "annealing_path");
  const auto lr = rho0.logp();
  const auto lp = pi.logp();
  std::vector<double> a(lr.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = w_rho0 * lr[i] + w_pi * lp[i];
  return LogDensity::from_unnormalized(rho0.grid(), std::move(a));
}

}  // namespace

std::string_view to_string(FlowKind kind) {
  switch (kind) {
    case FlowKind::kFR:
      return "FR";
    case FlowKind::kW:
      return "W";
    case FlowKind::kWFR:
      return "WFR";
    case FlowKind::kFRExact:
      return "FR_exact";
  }
  return "?";
}

FlowKind parse_flow_kind(std::string_view name) {
  if (name == "FR") return FlowKind::kFR;
  if (name == "W") return FlowKind::kW;
  if (name == "WFR") return FlowKind::kWFR;
  if (name == "FR_exact") return FlowKind::kFRExact;
  throw std::invalid_argument("unknown flow kind '" + std::string(name) +
                              "' (expected FR, W, WFR or FR_exact)");
}

TargetField TargetField::sample(const Potential& target, const Grid& grid) {
  return {target.eval(grid), target.eval_grad(grid), target.eval_laplacian(grid)};
}

FlowState::FlowState(FlowKind kind, const LogDensity& init, double step_size, bool renormalize)
    : kind_(kind),
      grid_(init.grid()),
      x_(init.logp().begin(), init.logp().end()),
      scratch_(init.size()),
      step_(step_size),
      renormalize_(renormalize) {
  if (kind == FlowKind::kFRExact) {
    throw std::invalid_argument("FR_exact has no PDE state; use fr_exact()");
  }
  if (!(step_size > 0.0) || !std::isfinite(step_size)) {
    throw std::invalid_argument("flow step size must be finite and > 0");
  }
  if (kind != FlowKind::kW && !renormalize) {
    throw std::invalid_argument("FR and WFR states always renormalize");
  }
}

FlowState::FlowState(FlowKind kind, const LogDensity& init, double step_size)
    : FlowState(kind, init, step_size, kind != FlowKind::kW) {}

double FlowState::mass() const { return std::exp(log_integral_exp(grid_, x_)); }

double FlowState::mass_drift() const {
  return renormalize_ ? drift_ : drift_ + std::abs(1.0 - mass());
}

LogDensity FlowState::density() const {
  return LogDensity::from_unnormalized(grid_, x_);
}

void FlowState::finish_step(bool renormalize) {
  std::swap(x_, scratch_);
  ++steps_;
  if (renormalize) {
    const double log_mass = detail::log_sum_exp(x_) + std::log(grid_.spacing());
    if (!std::isfinite(log_mass)) {
      throw FlowDivergence("non-finite iterate at t = " + time_string(time()), time());
    }
    drift_ += std::abs(std::expm1(log_mass));
    for (double& v : x_) v -= log_mass;
  } else if (!std::isfinite(detail::plain_sum(x_))) {
    throw FlowDivergence("non-finite iterate at t = " + time_string(time()) +
                             " (step size above the stability limit?)",
                         time());
  }
}

void fr_step(FlowState& state, std::span<const double> v_star) {
  require_kind(state, FlowKind::kFR, "fr_step");
  require_fields(state, {v_star}, "fr_step");
  euler_update<true, false>(state.x_, state.scratch_, state.step_, state.grid_.spacing(),
                            v_star.data(), nullptr, nullptr);
  state.finish_step(true);
}

void w_step(FlowState& state, std::span<const double> grad_v, std::span<const double> lap_v) {
  require_kind(state, FlowKind::kW, "w_step");
  require_fields(state, {grad_v, lap_v}, "w_step");
  euler_update<false, true>(state.x_, state.scratch_, state.step_, state.grid_.spacing(), nullptr,
                            grad_v.data(), lap_v.data());
  state.finish_step(state.renormalize_);
}

void wfr_step(FlowState& state, std::span<const double> v_star, std::span<const double> grad_v,
              std::span<const double> lap_v) {
  require_kind(state, FlowKind::kWFR, "wfr_step");
  require_fields(state, {v_star, grad_v, lap_v}, "wfr_step");
  euler_update<true, true>(state.x_, state.scratch_, state.step_, state.grid_.spacing(),
                           v_star.data(), grad_v.data(), lap_v.data());
  state.finish_step(true);
}

double cfl_limit(const Grid& grid) { return 0.5 * grid.spacing() * grid.spacing(); }

void check_cfl(FlowKind kind, double step_size, const Grid& grid, bool force) {
  if (kind != FlowKind::kW && kind != FlowKind::kWFR) return;
  if (force || step_size <= cfl_limit(grid)) return;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%s step size %.3g exceeds the explicit diffusion limit h^2/2 = %.3g "
                "(pass --force-cfl to run anyway)",
                std::string(to_string(kind)).c_str(), step_size, cfl_limit(grid));
  throw std::invalid_argument(buf);
}

LogDensity annealing_path(const LogDensity& rho0, const LogDensity& pi, double tau) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument("annealing_path: tau must lie in [0, 1]");
  }
  require_same_grid(rho0, pi, "annealing_path");
  if (tau == 0.0) return rho0;
  if (tau == 1.0) return pi;
  return mixture(rho0, pi, 1.0 - tau, tau);
}

LogDensity fr_exact(const LogDensity& rho0, const LogDensity& pi, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("fr_exact: t must be >= 0");
  require_same_grid(rho0, pi, "fr_exact");
  if (t == 0.0) return rho0;
  if (std::isinf(t)) return pi;
  return mixture(rho0, pi, std::exp(-t), -std::expm1(-t));
}

namespace {

struct RecordPoint {
  double t;
  std::uint64_t step;  // PDE kinds only
};

std::vector<RecordPoint> record_schedule(const FlowRunConfig& c) {
  std::vector<double> times;
  const auto count = static_cast<std::uint64_t>(std::floor(c.horizon / c.record_dt + 1e-9));
  for (std::uint64_t j = 0; j <= count; ++j) times.push_back(static_cast<double>(j) * c.record_dt);
  times.push_back(c.horizon);
  for (double t : c.extra_record_times) {
    if (t >= 0.0 && t <= c.horizon) times.push_back(t);
  }

  std::vector<RecordPoint> points;
  if (c.kind == FlowKind::kFRExact) {
    std::sort(times.begin(), times.end());
    for (double t : times) {
      if (points.empty() || std::abs(t - points.back().t) > 1e-12) points.push_back({t, 0});
    }
    return points;
  }
  std::vector<std::uint64_t> steps;
  for (double t : times) steps.push_back(static_cast<std::uint64_t>(std::llround(t / c.step_size)));
  std::sort(steps.begin(), steps.end());
  steps.erase(std::unique(steps.begin(), steps.end()), steps.end());
  for (auto k : steps) points.push_back({static_cast<double>(k) * c.step_size, k});
  return points;
}

TraceRow evaluate(double t, const LogDensity& rho, const LogDensity& pi,
                  const std::vector<double>& q_list, double mass_drift) {
  TraceRow r;
  r.t = t;
  r.kl = kl(rho, pi);
  for (double q : q_list) r.renyi.push_back(renyi(q, rho, pi));
  r.chi2 = chi2(rho, pi);
  r.mass_drift = mass_drift;
  return r;
}

void validate_run_config(const FlowRunConfig& c) {
  if (!(c.horizon > 0.0) || !std::isfinite(c.horizon)) {
    throw std::invalid_argument("run: horizon must be finite and > 0");
  }
  if (!(c.record_dt > 0.0) || !std::isfinite(c.record_dt)) {
    throw std::invalid_argument("run: record_dt must be finite and > 0");
  }
  if (c.kind != FlowKind::kFRExact && (!(c.step_size > 0.0) || !std::isfinite(c.step_size))) {
    throw std::invalid_argument("run: step size must be finite and > 0");
  }
  for (double q : c.q_list) {
    if (!(q > 1.0) || !std::isfinite(q)) throw std::invalid_argument("run: every q must be > 1");
  }
}

}  // namespace

FlowTrace run(const FlowRunConfig& config) {
  validate_run_config(config);
  const Grid grid(config.n);
  check_cfl(config.kind, config.step_size, grid, config.force_cfl);

  const LogDensity pi = from_potential(config.target, grid);
  const LogDensity rho0 = from_potential(config.init, grid);

  FlowTrace trace;
  trace.meta.kind = std::string(to_string(config.kind));
  trace.meta.target = config.target.name();
  trace.meta.init = config.init.name();
  trace.meta.step_size = config.kind == FlowKind::kFRExact ? 0.0 : config.step_size;
  trace.meta.n = config.n;
  trace.meta.record_dt = config.record_dt;
  trace.meta.horizon = config.horizon;
  trace.meta.q_list = config.q_list;
  trace.meta.rho0_fingerprint = fingerprint(rho0);
  trace.meta.pi_fingerprint = fingerprint(pi);

  const auto schedule = record_schedule(config);

  if (config.kind == FlowKind::kFRExact) {
    for (const auto& p : schedule) {
      trace.rows.push_back(evaluate(p.t, fr_exact(rho0, pi, p.t), pi, config.q_list, 0.0));
    }
    return trace;
  }

  const TargetField field = TargetField::sample(config.target, grid);
  const bool renormalize = config.kind != FlowKind::kW || config.renormalize_w;
  FlowState state(config.kind, rho0, config.step_size, renormalize);

  try {
    for (const auto& p : schedule) {
      while (state.steps() < p.step) {
        switch (config.kind) {
          case FlowKind::kFR:
            fr_step(state, field.v);
            break;
          case FlowKind::kW:
            w_step(state, field.grad, field.lap);
            break;
          case FlowKind::kWFR:
            wfr_step(state, field.v, field.grad, field.lap);
            break;
          case FlowKind::kFRExact:
            break;
        }
        if (config.on_step) config.on_step(state);
      }
      trace.rows.push_back(evaluate(state.time(), state.density(), pi, config.q_list,
                                    state.mass_drift()));
    }
  } catch (const FlowDivergence& e) {
    trace.failed = true;
    trace.failure = e.what();
    throw FlowRunError(e, std::move(trace));
  } catch (const std::exception& e) {
    // Divergence evaluation failures (e.g. overflow) also abort the run.
    trace.failed = true;
    trace.failure = e.what();
    throw FlowRunError(FlowDivergence(e.what(), state.time()), std::move(trace));
  }
  return trace;
}

}  // namespace gradflow
