#include "gradflow/trace.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace gradflow {
namespace {

constexpr double kSlack = 1e-12;

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line_no) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": bad number '" + s +
                             "'");
  }
}

}  // namespace

std::string renyi_column(double q) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "renyi_q%g", q);
  return buf;
}

void validate(const FlowTrace& trace) {
  for (std::size_t i = 0; i < trace.rows.size(); ++i) {
    const auto& r = trace.rows[i];
    if (i > 0 && !(r.t > trace.rows[i - 1].t)) {
      throw std::invalid_argument("trace times must be strictly increasing (row " +
                                  std::to_string(i) + ")");
    }
    auto check = [&](double v, const char* what) {
      if (!std::isfinite(v) || v < -kSlack) {
        throw std::invalid_argument(std::string("trace ") + what + " at row " + std::to_string(i) +
                                    " is invalid: " + fmt17(v));
      }
    };
    check(r.kl, "kl");
    for (double v : r.renyi) check(v, "renyi");
    check(r.chi2, "chi2");
  }
}

void write_csv(std::ostream& out, const FlowTrace& trace) {
  out << "t,kl";
  for (double q : trace.meta.q_list) out << ',' << renyi_column(q);
  out << ",chi2,mass_drift\n";
  for (const auto& r : trace.rows) {
    out << fmt17(r.t) << ',' << fmt17(r.kl);
    for (double v : r.renyi) out << ',' << fmt17(v);
    out << ',' << fmt17(r.chi2) << ',' << fmt17(r.mass_drift) << '\n';
  }
  if (trace.failed) {
    const double t = trace.rows.empty() ? 0.0 : trace.rows.back().t;
    std::string reason = trace.failure;
    for (char& c : reason) {
      if (c == ',' || c == '\n') c = ' ';
    }
    out << "FAILED," << fmt17(t) << ',' << reason << '\n';
  }
}

FlowTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("trace csv: empty input");
  const auto header = split(line);
  if (header.size() < 4 || header[0] != "t" || header[1] != "kl" ||
      header[header.size() - 2] != "chi2" || header.back() != "mass_drift") {
    throw std::runtime_error("trace csv: header must be t,kl,[renyi_q<q>...,]chi2,mass_drift");
  }
  FlowTrace trace;
  for (std::size_t c = 2; c + 2 < header.size(); ++c) {
    const std::string prefix = "renyi_q";
    if (header[c].rfind(prefix, 0) != 0) {
      throw std::runtime_error("trace csv: unexpected column '" + header[c] + "'");
    }
    trace.meta.q_list.push_back(parse_double(header[c].substr(prefix.size()), 1));
  }

  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (!cells.empty() && cells[0] == "FAILED") {
      trace.failed = true;
      trace.failure = cells.size() > 2 ? cells[2] : std::string{};
      break;
    }
    if (cells.size() != header.size()) {
      throw std::runtime_error("trace csv line " + std::to_string(line_no) + ": expected " +
                               std::to_string(header.size()) + " columns");
    }
    TraceRow r;
    r.t = parse_double(cells[0], line_no);
    r.kl = parse_double(cells[1], line_no);
    for (std::size_t c = 2; c + 2 < cells.size(); ++c) r.renyi.push_back(parse_double(cells[c], line_no));
    r.chi2 = parse_double(cells[cells.size() - 2], line_no);
    r.mass_drift = parse_double(cells.back(), line_no);
    trace.rows.push_back(std::move(r));
  }
  return trace;
}

}  // namespace gradflow
