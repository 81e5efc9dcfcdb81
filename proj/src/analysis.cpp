#include "gradflow/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <tuple>

namespace gradflow {
namespace {

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

}  // namespace

std::size_t nearest_row(const FlowTrace& trace, double t) {
  if (trace.rows.empty()) throw std::invalid_argument("nearest_row: empty trace");
  std::size_t best = 0;
  double best_gap = std::abs(trace.rows[0].t - t);
  for (std::size_t i = 1; i < trace.rows.size(); ++i) {
    const double gap = std::abs(trace.rows[i].t - t);
    if (gap < best_gap) {
      best = i;
      best_gap = gap;
    }
  }
  return best;
}

SlopeResult slope(const FlowTrace& trace, double t1, double t2) {
  if (!(t1 < t2)) throw std::invalid_argument("slope: need t1 < t2");
  if (trace.rows.empty()) throw std::invalid_argument("slope: empty trace");
  const double lo = trace.rows.front().t;
  const double hi = trace.rows.back().t;
  const double tol = 1e-9 * std::max(1.0, hi);
  if (t1 < lo - tol || t2 > hi + tol) {
    throw std::invalid_argument("slope: window [" + fmt("%g", t1) + ", " + fmt("%g", t2) +
                                "] lies outside the trace range [" + fmt("%g", lo) + ", " +
                                fmt("%g", hi) + "]");
  }
  const std::size_t i1 = nearest_row(trace, t1);
  const std::size_t i2 = nearest_row(trace, t2);
  if (i1 == i2) throw std::invalid_argument("slope: both endpoints snap to the same row");

  SlopeResult r;
  r.t1_requested = t1;
  r.t2_requested = t2;
  r.t1 = trace.rows[i1].t;
  r.t2 = trace.rows[i2].t;
  r.kl1 = trace.rows[i1].kl;
  r.kl2 = trace.rows[i2].kl;
  if (!(r.kl1 > 0.0) || !(r.kl2 > 0.0)) {
    throw std::invalid_argument("slope: KL is not positive at an endpoint (numerical floor reached)");
  }
  r.value = (std::log(r.kl2) - std::log(r.kl1)) / (r.t2 - r.t1);
  return r;
}

ResidualReport theory_residual(const FlowTrace& trace, const CumulantTable& table, int order,
                               double window_start) {
  if (trace.meta.kind != "FR" && trace.meta.kind != "FR_exact") {
    throw std::invalid_argument("theory_residual: needs an FR or FR_exact trace, got '" +
                                trace.meta.kind + "'");
  }
  if (trace.meta.rho0_fingerprint != table.rho0_fingerprint() ||
      trace.meta.pi_fingerprint != table.pi_fingerprint()) {
    throw std::invalid_argument(
        "theory_residual: cumulant table was built from a different (rho0, pi) pair");
  }
  ResidualReport report;
  report.order = order;
  report.window_start = window_start;
  for (const auto& row : trace.rows) {
    ResidualPoint p;
    p.t = row.t;
    p.kl = row.kl;
    p.series = kl_series(table, row.t, order);
    p.residual = p.kl - p.series;
    report.points.push_back(p);
    if (row.t >= window_start) {
      const double scaled = std::abs(p.residual) * std::exp(3.0 * row.t);
      report.summary = std::max(report.summary.value_or(0.0), scaled);
      if (auto tail = kl_series_tail(table, row.t, order)) {
        const double bound = std::abs(*tail) * std::exp(3.0 * row.t);
        report.predicted_tail_bound = std::max(report.predicted_tail_bound.value_or(0.0), bound);
      }
    }
  }
  return report;
}

AdditivityReport slope_additivity_report(double fr_slope, double w_slope, double wfr_slope) {
  for (double s : {fr_slope, w_slope, wfr_slope}) {
    if (!std::isfinite(s)) throw std::invalid_argument("slope_additivity_report: non-finite slope");
  }
  AdditivityReport r;
  r.fr = fr_slope;
  r.w = w_slope;
  r.wfr = wfr_slope;
  const double sum = fr_slope + w_slope;
  r.discrepancy = wfr_slope - sum;
  r.relative = sum == 0.0 ? 0.0 : r.discrepancy / std::abs(sum);
  return r;
}

void write_slopes_csv(std::ostream& out, const std::vector<SlopeEntry>& entries) {
  out << "target,init,flow,t1,t2,t1_used,t2_used,kl_t1,kl_t2,slope\n";
  for (const auto& e : entries) {
    const auto& r = e.result;
    out << e.target << ',' << e.init << ',' << e.flow << ',' << fmt("%.17g", r.t1_requested) << ','
        << fmt("%.17g", r.t2_requested) << ',' << fmt("%.17g", r.t1) << ',' << fmt("%.17g", r.t2)
        << ',' << fmt("%.17g", r.kl1) << ',' << fmt("%.17g", r.kl2) << ','
        << fmt("%.17g", r.value) << '\n';
  }
}

std::vector<SlopeEntry> read_slopes_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("target,init,flow,", 0) != 0) {
    throw std::runtime_error("slopes csv: missing header");
  }
  std::vector<SlopeEntry> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 10) throw std::runtime_error("slopes csv: expected 10 columns");
    SlopeEntry e{cells[0], cells[1], cells[2], {}};
    e.result.t1_requested = std::stod(cells[3]);
    e.result.t2_requested = std::stod(cells[4]);
    e.result.t1 = std::stod(cells[5]);
    e.result.t2 = std::stod(cells[6]);
    e.result.kl1 = std::stod(cells[7]);
    e.result.kl2 = std::stod(cells[8]);
    e.result.value = std::stod(cells[9]);
    out.push_back(std::move(e));
  }
  return out;
}

std::string format_slope_table(const std::vector<SlopeEntry>& entries) {
  // Column order follows first appearance of each (target, init).
  std::vector<std::pair<std::string, std::string>> columns;
  std::vector<std::string> flows;
  std::map<std::tuple<std::string, std::string, std::string>, const SlopeEntry*> index;
  for (const auto& e : entries) {
    const auto col = std::make_pair(e.target, e.init);
    if (std::find(columns.begin(), columns.end(), col) == columns.end()) columns.push_back(col);
    if (std::find(flows.begin(), flows.end(), e.flow) == flows.end()) flows.push_back(e.flow);
    index[{e.target, e.init, e.flow}] = &e;
  }
  const std::vector<std::string> preferred = {"FR", "WFR", "W", "FR_exact"};
  std::vector<std::string> rows;
  for (const auto& f : preferred) {
    if (std::find(flows.begin(), flows.end(), f) != flows.end()) rows.push_back(f);
  }

  std::ostringstream out;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-10s", "");
  out << buf;
  for (const auto& [target, init] : columns) {
    std::snprintf(buf, sizeof buf, " | %-22s", (target + " / " + init).c_str());
    out << buf;
  }
  out << '\n' << std::string(10 + 25 * columns.size(), '-') << '\n';
  for (const auto& flow : rows) {
    std::snprintf(buf, sizeof buf, "%-10s", flow.c_str());
    out << buf;
    for (const auto& [target, init] : columns) {
      auto it = index.find({target, init, flow});
      if (it == index.end()) {
        std::snprintf(buf, sizeof buf, " | %-22s", "-");
      } else {
        std::snprintf(buf, sizeof buf, " | %-22.4f", it->second->result.value);
      }
      out << buf;
    }
    out << '\n';
  }

  bool header_done = false;
  for (const auto& [target, init] : columns) {
    auto fr = index.find({target, init, "FR"});
    auto w = index.find({target, init, "W"});
    auto wfr = index.find({target, init, "WFR"});
    if (fr == index.end() || w == index.end() || wfr == index.end()) continue;
    if (!header_done) {
      out << "\nslope additivity: WFR - (FR + W)\n";
      header_done = true;
    }
    const auto rep = slope_additivity_report(fr->second->result.value, w->second->result.value,
                                             wfr->second->result.value);
    std::snprintf(buf, sizeof buf, "  %-22s", (target + " / " + init).c_str());
    out << buf;
    std::snprintf(buf, sizeof buf, " FR+W = %9.4f  WFR = %9.4f", rep.fr + rep.w, rep.wfr);
    out << buf;
    std::snprintf(buf, sizeof buf, "  discrepancy = %+.4f (%+.2f%%)\n", rep.discrepancy,
                  100.0 * rep.relative);
    out << buf;
  }
  return out.str();
}

void write_residual_csv(std::ostream& out, const ResidualReport& report) {
  out << "t,kl,series,residual,scaled_residual\n";
  for (const auto& p : report.points) {
    out << fmt("%.17g", p.t) << ',' << fmt("%.17g", p.kl) << ',' << fmt("%.17g", p.series) << ','
        << fmt("%.17g", p.residual) << ',' << fmt("%.17g", p.residual * std::exp(3.0 * p.t))
        << '\n';
  }
}

}  // namespace gradflow
