#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace gradflow {

struct TraceMeta {
  std::string kind;
  std::string target;
  std::string init;
  double step_size = 0.0;
  std::size_t n = 0;
  double record_dt = 0.0;
  double horizon = 0.0;
  std::vector<double> q_list;
  std::uint64_t rho0_fingerprint = 0;
  std::uint64_t pi_fingerprint = 0;
};

struct TraceRow {
  double t = 0.0;
  double kl = 0.0;
  std::vector<double> renyi;  // one entry per meta.q_list
  double chi2 = 0.0;
  double mass_drift = 0.0;
};

// Time-stamped divergences along one flow run.
struct FlowTrace {
  TraceMeta meta;
  std::vector<TraceRow> rows;
  bool failed = false;
  std::string failure;

  bool empty() const { return rows.empty(); }
};

// Throws std::invalid_argument unless t is strictly increasing and every
// divergence entry is finite and >= -1e-12.
void validate(const FlowTrace& trace);

// Header "t,kl,renyi_q<q>...,chi2,mass_drift", values with 17 significant
// digits. A failed trace ends with a "FAILED,<t>,<reason>" marker row.
void write_csv(std::ostream& out, const FlowTrace& trace);

// Parses what write_csv produces. Only meta.q_list is recovered from the
// header; the rest of the meta is left default. Throws std::runtime_error on
// missing columns or malformed rows.
FlowTrace read_trace_csv(std::istream& in);

// Column name for the q-Renyi divergence, e.g. "renyi_q2" or "renyi_q1.5".
std::string renyi_column(double q);

}  // namespace gradflow
