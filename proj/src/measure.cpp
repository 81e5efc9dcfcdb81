#include "gradflow/measure.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "kernels.hpp"

namespace gradflow {
namespace {

constexpr double kNegativeKlSlack = 1e-12;

void require_finite(std::span<const double> a, const char* what) {
  for (double v : a) {
    if (!std::isfinite(v)) throw std::invalid_argument(std::string(what) + ": non-finite value");
  }
}

}  // namespace

LogDensity LogDensity::from_unnormalized(const Grid& grid, std::vector<double> log_values) {
  require_grid_size(grid, log_values, "LogDensity");
  require_finite(log_values, "LogDensity");
  const double log_z = log_integral_exp(grid, log_values);
  for (double& v : log_values) v -= log_z;
  LogDensity out(grid, std::move(log_values), log_z);
  assert(std::abs(out.mass() - 1.0) <= 1e-12);
  return out;
}

std::vector<double> LogDensity::density() const {
  std::vector<double> p(logp_.size());
  std::transform(logp_.begin(), logp_.end(), p.begin(), [](double v) { return std::exp(v); });
  return p;
}

double LogDensity::mass() const { return quadrature(grid_, density()); }

double log_integral_exp(const Grid& grid, std::span<const double> a) {
  require_grid_size(grid, a, "log_integral_exp");
  const double lse = detail::log_sum_exp(a);
  if (!std::isfinite(lse)) {
    require_finite(a, "log_integral_exp");
    throw std::runtime_error("log_integral_exp: overflow");
  }
  return lse + std::log(grid.spacing());
}

LogDensity from_potential(const Potential& p, const Grid& grid) {
  auto values = p.eval(grid);
  for (double& v : values) v = -v;
  return LogDensity::from_unnormalized(grid, std::move(values));
}

double log_normalizer(const Potential& p, const Grid& grid) {
  auto values = p.eval(grid);
  for (double& v : values) v = -v;
  return log_integral_exp(grid, values);
}

void require_same_grid(const LogDensity& a, const LogDensity& b, const char* what) {
  if (!(a.grid() == b.grid())) {
    throw std::invalid_argument(std::string(what) + ": densities live on different grids (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) +
                                " points)");
  }
}

double kl(const LogDensity& rho, const LogDensity& pi) {
  require_same_grid(rho, pi, "kl");
  const auto lr = rho.logp();
  const auto lp = pi.logp();
  double sum = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) sum += std::exp(lr[i]) * (lr[i] - lp[i]);
  const double value = sum * rho.grid().spacing();
  if (value < 0.0) {
    if (value >= -kNegativeKlSlack) return 0.0;
    throw std::runtime_error("kl: negative divergence " + std::to_string(value) +
                             " (densities not normalized?)");
  }
  return value;
}

double renyi(double q, const LogDensity& rho, const LogDensity& pi) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw std::invalid_argument("renyi: order q must be finite and > 1");
  }
  require_same_grid(rho, pi, "renyi");
  const auto lr = rho.logp();
  const auto lp = pi.logp();
  std::vector<double> a(lr.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = q * lr[i] - (q - 1.0) * lp[i];
  return log_integral_exp(rho.grid(), a) / (q - 1.0);
}

double chi2(const LogDensity& rho, const LogDensity& pi) {
  require_same_grid(rho, pi, "chi2");
  const auto lr = rho.logp();
  const auto lp = pi.logp();
  std::vector<double> a(lr.size());
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = 2.0 * lr[i] - lp[i];
  return std::expm1(log_integral_exp(rho.grid(), a));
}

AssumptionReport check_assumptions(const LogDensity& rho0, const LogDensity& pi, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) {
    throw std::invalid_argument("check_assumptions: alpha must be finite and >= 0");
  }
  require_same_grid(rho0, pi, "check_assumptions");
  const auto lr = rho0.logp();
  const auto lp = pi.logp();

  AssumptionReport r;
  r.alpha = alpha;
  r.a2_log_margin = std::numeric_limits<double>::infinity();
  double min_ratio = std::numeric_limits<double>::infinity();
  double entropy = 0.0;
  for (std::size_t i = 0; i < lr.size(); ++i) {
    r.a2_log_margin = std::min(r.a2_log_margin, lr[i] - (1.0 + alpha) * lp[i]);
    min_ratio = std::min(min_ratio, lr[i] - lp[i]);
    entropy -= lp[i] * std::exp(lp[i]);
  }
  r.a2_holds = std::isfinite(r.a2_log_margin);
  r.pi_entropy = entropy * pi.grid().spacing();
  r.a1_holds = std::isfinite(r.pi_entropy);
  r.b_constant = -min_ratio;
  return r;
}

std::uint64_t fingerprint(const LogDensity& density) {
  std::uint64_t hash = 14695981039346656037ULL;
  auto mix = [&hash](const void* data, std::size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
      hash ^= bytes[i];
      hash *= 1099511628211ULL;
    }
  };
  const std::uint64_t n = density.size();
  mix(&n, sizeof n);
  mix(density.logp().data(), density.size() * sizeof(double));
  return hash;
}

void write_csv(std::ostream& out, const LogDensity& density) {
  char buf[96];
  out << "x,logp,p\n";
  const auto lp = density.logp();
  for (std::size_t i = 0; i < lp.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", density.grid().point(i), lp[i],
                  std::exp(lp[i]));
    out << buf;
  }
}

}  // namespace gradflow
