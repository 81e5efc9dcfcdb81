#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gradflow/measure.hpp"

namespace gradflow {

// Cumulants of Y = log(rho0 / pi) under X ~ pi, together with the quadrature
// data needed to evaluate the cumulant generating function K_Y directly.
class CumulantTable {
 public:
  static constexpr int kDefaultOrder = 8;
  static constexpr int kMaxOrder = 16;

  // Requires 2 <= max_order <= 16 and a shared grid.
  static CumulantTable build(const LogDensity& rho0, const LogDensity& pi,
                             int max_order = kDefaultOrder);

  int max_order() const { return static_cast<int>(kappas_.size()); }
  // kappa(1) .. kappa(max_order).
  double kappa(int n) const;
  std::span<const double> kappas() const { return kappas_; }

  std::span<const double> y_values() const { return y_; }
  // pi-weights exp(logp_pi) * h, rescaled to sum to exactly one.
  std::span<const double> pi_weights() const { return weights_; }
  double mean() const { return mean_; }
  // Y - mean, cached for the centered CGF evaluators.
  std::span<const double> centered() const { return centered_; }
  double max_abs_centered() const { return max_abs_centered_; }

  std::uint64_t rho0_fingerprint() const { return rho0_fp_; }
  std::uint64_t pi_fingerprint() const { return pi_fp_; }

 private:
  std::vector<double> kappas_;
  std::vector<double> y_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> centered_;
  double mean_ = 0.0;
  double max_abs_centered_ = 0.0;
  std::uint64_t rho0_fp_ = 0;
  std::uint64_t pi_fp_ = 0;

  friend double centered_cgf(const CumulantTable& table, double z);
};

CumulantTable build_table(const LogDensity& rho0, const LogDensity& pi,
                          int max_order = CumulantTable::kDefaultOrder);

// K_Y(z) = log E_pi[exp(z Y)] by quadrature, not by series truncation.
double cgf_eval(const CumulantTable& table, double z);

// K_Y'(z) as the exp(zY)-tilted mean of Y.
double cgf_derivative(const CumulantTable& table, double z);

// K_Y(z) - z * mean: the CGF of the centered variable, evaluated with
// expm1/log1p for small |z| so that values near zero keep relative accuracy.
double centered_cgf(const CumulantTable& table, double z);

// KL(mu_tau || pi) = (1 - tau) K_Y'(1 - tau) - K_Y(1 - tau), tau in [0, 1].
double kl_closed_form(const CumulantTable& table, double tau);

// R_q(mu_tau || pi) = K_Y(q(1 - tau))/(q - 1) - q K_Y(1 - tau)/(q - 1).
double renyi_closed_form(const CumulantTable& table, double q, double tau);

// sum_{n=2}^{order} kappa_n / (n (n-2)!) e^{-n t}.
double kl_series(const CumulantTable& table, double t, int order);

// sum_{n=2}^{order} (q^n - q)/(q - 1) kappa_n / n! e^{-n t}.
double renyi_series(const CumulantTable& table, double q, double t, int order);

// First omitted series term, or nullopt when kappa_{order+1} is not tabulated.
std::optional<double> kl_series_tail(const CumulantTable& table, double t, int order);
std::optional<double> renyi_series_tail(const CumulantTable& table, double q, double t, int order);

// Coefficient of e^{-n t} in the KL series.
double kl_series_coefficient(const CumulantTable& table, int n);

// Rows "n,kappa_n".
void write_csv(std::ostream& out, const CumulantTable& table);

}  // namespace gradflow
