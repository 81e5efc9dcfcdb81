#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "gradflow/cumulant.hpp"
#include "gradflow/trace.hpp"

namespace gradflow {

// Two-point slope of log KL against t. The requested endpoints snap to the
// nearest recorded rows; the snapped times are reported alongside.
struct SlopeResult {
  double value = 0.0;
  double t1_requested = 0.0;
  double t2_requested = 0.0;
  double t1 = 0.0;
  double t2 = 0.0;
  double kl1 = 0.0;
  double kl2 = 0.0;
};

// Index of the row closest to t; ties go to the earlier row.
std::size_t nearest_row(const FlowTrace& trace, double t);

// (log KL(t2) - log KL(t1)) / (t2 - t1). Throws std::invalid_argument when
// t1 >= t2, an endpoint lies outside the trace, both snap to the same row, or
// KL is not strictly positive at an endpoint.
SlopeResult slope(const FlowTrace& trace, double t1, double t2);

struct ResidualPoint {
  double t = 0.0;
  double kl = 0.0;
  double series = 0.0;
  double residual = 0.0;  // kl - series
};

struct ResidualReport {
  int order = 2;
  double window_start = 3.0;
  std::vector<ResidualPoint> points;
  // max over rows with t >= window_start of |residual| e^{3t}; empty when the
  // trace ends before window_start.
  std::optional<double> summary;
  // Same statistic for the first omitted series term alone, when tabulated.
  std::optional<double> predicted_tail_bound;
};

// KL along an FR or FR_exact trace minus the truncated cumulant series. The
// table must come from the same (rho0, pi) as the trace (checked through the
// density fingerprints).
ResidualReport theory_residual(const FlowTrace& trace, const CumulantTable& table, int order,
                               double window_start = 3.0);

struct AdditivityReport {
  double fr = 0.0;
  double w = 0.0;
  double wfr = 0.0;
  double discrepancy = 0.0;  // wfr - (fr + w)
  double relative = 0.0;     // discrepancy / |fr + w|, 0 when fr + w == 0
};

AdditivityReport slope_additivity_report(double fr_slope, double w_slope, double wfr_slope);

struct SlopeEntry {
  std::string target;
  std::string init;
  std::string flow;
  SlopeResult result;
};

// target,init,flow,t1,t2,t1_used,t2_used,kl_t1,kl_t2,slope
void write_slopes_csv(std::ostream& out, const std::vector<SlopeEntry>& entries);
std::vector<SlopeEntry> read_slopes_csv(std::istream& in);

// Flows as rows (FR, WFR, W, FR_exact when present), initializations as
// columns grouped by target, followed by the additivity check per init.
std::string format_slope_table(const std::vector<SlopeEntry>& entries);

void write_residual_csv(std::ostream& out, const ResidualReport& report);

}  // namespace gradflow
