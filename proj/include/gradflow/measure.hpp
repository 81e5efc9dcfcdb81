#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "gradflow/grid.hpp"
#include "gradflow/potential.hpp"

namespace gradflow {

// Normalized log-density on a grid: quadrature(exp(logp)) == 1 within 1e-12
// and every entry is finite.
class LogDensity {
 public:
  // Subtracts log quadrature(exp(values)) from `log_values`. Throws
  // std::invalid_argument on size mismatch or non-finite entries.
  static LogDensity from_unnormalized(const Grid& grid, std::vector<double> log_values);

  const Grid& grid() const { return grid_; }
  std::span<const double> logp() const { return logp_; }
  std::size_t size() const { return logp_.size(); }

  // The log of the normalizing constant removed at construction (log Z for
  // densities built from a potential).
  double log_normalizer() const { return log_normalizer_; }

  std::vector<double> density() const;
  double mass() const;

 private:
  LogDensity(Grid grid, std::vector<double> logp, double log_normalizer)
      : grid_(std::move(grid)), logp_(std::move(logp)), log_normalizer_(log_normalizer) {}

  Grid grid_;
  std::vector<double> logp_;
  double log_normalizer_ = 0.0;
};

// log quadrature(exp(a)) = log(h * sum exp(a_i)), max-shifted so |a| up to
// ~700 never overflows. Throws on non-finite input.
double log_integral_exp(const Grid& grid, std::span<const double> a);

// pi ∝ exp(-V) on the grid.
LogDensity from_potential(const Potential& p, const Grid& grid);
double log_normalizer(const Potential& p, const Grid& grid);

// KL(rho || pi). Round-off negatives down to -1e-12 are clamped to 0; anything
// more negative throws std::runtime_error (it means a normalization bug).
double kl(const LogDensity& rho, const LogDensity& pi);

// (1/(q-1)) log quadrature(exp(q logp_rho - (q-1) logp_pi)); requires q > 1.
double renyi(double q, const LogDensity& rho, const LogDensity& pi);

// quadrature(rho^2 / pi) - 1.
double chi2(const LogDensity& rho, const LogDensity& pi);

struct AssumptionReport {
  double alpha = 0.0;
  // min_i (logp_rho0 - (1 + alpha) logp_pi); (A2) holds on the grid when finite.
  double a2_log_margin = 0.0;
  bool a2_holds = false;
  // -quadrature(logp_pi * pi): E_pi[V_*] up to the constant log Z_1. (A1)
  // holds when finite.
  double pi_entropy = 0.0;
  bool a1_holds = false;
  // M = -min_i (logp_rho0 - logp_pi) for the warm-start condition (B).
  double b_constant = 0.0;
};

AssumptionReport check_assumptions(const LogDensity& rho0, const LogDensity& pi, double alpha);

// 64-bit FNV-1a hash of the grid size and logp bytes.
std::uint64_t fingerprint(const LogDensity& density);

// Columns x, logp, p with 17 significant digits.
void write_csv(std::ostream& out, const LogDensity& density);

// Throws std::invalid_argument when the two densities live on different grids.
void require_same_grid(const LogDensity& a, const LogDensity& b, const char* what);

}  // namespace gradflow
