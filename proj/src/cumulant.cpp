#include "gradflow/cumulant.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <cstdio>
#include <ostream>
#include <stdexcept>
#include <string>

#include "kernels.hpp"

namespace gradflow {
namespace {

double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

void require_tau(double tau, const char* what) {
  if (!(tau >= 0.0 && tau <= 1.0)) {
    throw std::invalid_argument(std::string(what) + ": tau must lie in [0, 1]");
  }
}

void require_q(double q, const char* what) {
  if (!(q > 1.0) || !std::isfinite(q)) {
    throw std::invalid_argument(std::string(what) + ": q must be finite and > 1");
  }
}

void require_order(const CumulantTable& table, int order, const char* what) {
  if (order < 2 || order > table.max_order()) {
    throw std::invalid_argument(std::string(what) + ": order must lie in [2, " +
                                std::to_string(table.max_order()) + "]");
  }
}

void require_time(double t, const char* what) {
  if (!(t >= 0.0) || !std::isfinite(t)) {
    throw std::invalid_argument(std::string(what) + ": t must be finite and >= 0");
  }
}

// Weighted sums S0 = sum w e^{z d}, S1 = sum w d e^{z d}, both scaled by
// e^{-shift} where shift = max(z d).
struct Tilt {
  double shift;
  double s0;
  double s1;
};

Tilt tilt(const CumulantTable& table, double z) {
  const auto d = table.centered();
  const auto w = table.pi_weights();
  double shift = -std::numeric_limits<double>::infinity();
  for (double di : d) shift = std::max(shift, z * di);
  Tilt r{shift, 0.0, 0.0};
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double e = w[i] * std::exp(z * d[i] - shift);
    r.s0 += e;
    r.s1 += e * d[i];
  }
  return r;
}

}  // namespace

CumulantTable CumulantTable::build(const LogDensity& rho0, const LogDensity& pi, int max_order) {
  if (max_order < 2 || max_order > kMaxOrder) {
    throw std::invalid_argument("build_table: max_order must lie in [2, 16], got " +
                                std::to_string(max_order));
  }
  require_same_grid(rho0, pi, "build_table");

  CumulantTable t;
  const auto lr = rho0.logp();
  const auto lp = pi.logp();
  const std::size_t n = lr.size();
  const double h = pi.grid().spacing();

  t.y_.resize(n);
  t.weights_.resize(n);
  t.log_weights_.resize(n);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t.y_[i] = lr[i] - lp[i];
    t.weights_[i] = std::exp(lp[i]) * h;
    total += t.weights_[i];
  }
  const double log_total = std::log(total);
  for (std::size_t i = 0; i < n; ++i) {
    t.weights_[i] /= total;
    t.log_weights_[i] = lp[i] + std::log(h) - log_total;
  }

  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += t.weights_[i] * t.y_[i];
  t.mean_ = mean;

  t.centered_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    t.centered_[i] = t.y_[i] - mean;
    t.max_abs_centered_ = std::max(t.max_abs_centered_, std::abs(t.centered_[i]));
  }

  // Central moments m[k] = sum w (Y - mean)^k; m[0] = 1 and m[1] = 0.
  std::vector<double> m(max_order + 1, 0.0);
  m[0] = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = t.centered_[i];
    double p = d * d;
    for (int k = 2; k <= max_order; ++k) {
      m[k] += t.weights_[i] * p;
      p *= d;
    }
  }

  t.kappas_.assign(max_order, 0.0);
  t.kappas_[0] = mean;
  t.kappas_[1] = m[2];
  for (int order = 3; order <= max_order; ++order) {
    double k = m[order];
    for (int j = 1; j <= order - 2; ++j) {
      k -= binomial(order - 1, j) * t.kappas_[j] * m[order - 1 - j];
    }
    t.kappas_[order - 1] = k;
  }

  t.rho0_fp_ = fingerprint(rho0);
  t.pi_fp_ = fingerprint(pi);
  return t;
}

CumulantTable build_table(const LogDensity& rho0, const LogDensity& pi, int max_order) {
  return CumulantTable::build(rho0, pi, max_order);
}

double CumulantTable::kappa(int n) const {
  if (n < 1 || n > max_order()) {
    throw std::out_of_range("kappa: order " + std::to_string(n) + " not tabulated");
  }
  return kappas_[n - 1];
}

double centered_cgf(const CumulantTable& table, double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("cgf: z must be finite");
  if (std::abs(z) * table.max_abs_centered() <= 1.0) {
    const auto d = table.centered();
    const auto w = table.pi_weights();
    double s = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) s += w[i] * std::expm1(z * d[i]);
    return std::log1p(s);
  }
  std::vector<double> a(table.centered().size());
  const auto d = table.centered();
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = z * d[i] + table.log_weights_[i];
  return detail::log_sum_exp(a);
}

double cgf_eval(const CumulantTable& table, double z) {
  return z * table.mean() + centered_cgf(table, z);
}

double cgf_derivative(const CumulantTable& table, double z) {
  if (!std::isfinite(z)) throw std::invalid_argument("cgf_derivative: z must be finite");
  const Tilt r = tilt(table, z);
  return table.mean() + r.s1 / r.s0;
}

double kl_closed_form(const CumulantTable& table, double tau) {
  require_tau(tau, "kl_closed_form");
  const double z = 1.0 - tau;
  if (z == 0.0) return 0.0;
  // The mean contributions z*mean cancel between the two terms.
  const Tilt r = tilt(table, z);
  return z * (r.s1 / r.s0) - centered_cgf(table, z);
}

double renyi_closed_form(const CumulantTable& table, double q, double tau) {
  require_q(q, "renyi_closed_form");
  require_tau(tau, "renyi_closed_form");
  const double z = 1.0 - tau;
  if (z == 0.0) return 0.0;
  return (centered_cgf(table, q * z) - q * centered_cgf(table, z)) / (q - 1.0);
}

double kl_series_coefficient(const CumulantTable& table, int n) {
  return table.kappa(n) / (n * factorial(n - 2));
}

double kl_series(const CumulantTable& table, double t, int order) {
  require_order(table, order, "kl_series");
  require_time(t, "kl_series");
  double sum = 0.0;
  for (int n = order; n >= 2; --n) sum += kl_series_coefficient(table, n) * std::exp(-n * t);
  return sum;
}

namespace {
double renyi_coefficient(const CumulantTable& table, double q, int n) {
  return (std::pow(q, n) - q) / (q - 1.0) * table.kappa(n) / factorial(n);
}
}  // namespace

double renyi_series(const CumulantTable& table, double q, double t, int order) {
  require_q(q, "renyi_series");
  require_order(table, order, "renyi_series");
  require_time(t, "renyi_series");
  double sum = 0.0;
  for (int n = order; n >= 2; --n) sum += renyi_coefficient(table, q, n) * std::exp(-n * t);
  return sum;
}

std::optional<double> kl_series_tail(const CumulantTable& table, double t, int order) {
  require_order(table, order, "kl_series_tail");
  require_time(t, "kl_series_tail");
  if (order + 1 > table.max_order()) return std::nullopt;
  return kl_series_coefficient(table, order + 1) * std::exp(-(order + 1) * t);
}

std::optional<double> renyi_series_tail(const CumulantTable& table, double q, double t,
                                        int order) {
  require_q(q, "renyi_series_tail");
  require_order(table, order, "renyi_series_tail");
  require_time(t, "renyi_series_tail");
  if (order + 1 > table.max_order()) return std::nullopt;
  return renyi_coefficient(table, q, order + 1) * std::exp(-(order + 1) * t);
}

void write_csv(std::ostream& out, const CumulantTable& table) {
  char buf[64];
  out << "n,kappa_n\n";
  for (int n = 1; n <= table.max_order(); ++n) {
    std::snprintf(buf, sizeof buf, "%d,%.17g\n", n, table.kappa(n));
    out << buf;
  }
}

}  // namespace gradflow
