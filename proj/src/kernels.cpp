#include "kernels.hpp"

#include <cmath>
#include <cstddef>

namespace gradflow::detail {

double log_sum_exp(std::span<const double> a) {
  const double* p = a.data();
  const std::size_t n = a.size();
  double m = p[0];
  for (std::size_t i = 1; i < n; ++i) m = p[i] > m ? p[i] : m;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(p[i] - m);
  return m + std::log(s);
}

double plain_sum(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v;
  return s;
}

}  // namespace gradflow::detail
