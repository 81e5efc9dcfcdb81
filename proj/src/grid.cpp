#include "gradflow/grid.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace gradflow {

Grid::Grid(std::size_t n) : n_(n), h_(0.0) {
  if (n < kMinPoints) {
    throw std::invalid_argument("grid needs at least " + std::to_string(kMinPoints) +
                                " points, got " + std::to_string(n));
  }
  h_ = 2.0 * std::numbers::pi / static_cast<double>(n);
  auto pts = std::make_shared<std::vector<double>>(n);
  for (std::size_t i = 0; i < n; ++i) {
    (*pts)[i] = -std::numbers::pi + static_cast<double>(i) * h_;
  }
  points_ = std::move(pts);
}

Grid make_grid(std::size_t n) { return Grid(n); }

void require_grid_size(const Grid& grid, std::span<const double> values, const char* what) {
  if (values.size() != grid.size()) {
    throw std::invalid_argument(std::string(what) + ": expected " + std::to_string(grid.size()) +
                                " values, got " + std::to_string(values.size()));
  }
}

double quadrature(const Grid& grid, std::span<const double> values) {
  require_grid_size(grid, values, "quadrature");
  double sum = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw std::invalid_argument("quadrature: non-finite integrand");
    sum += v;
  }
  return grid.spacing() * sum;
}

std::vector<double> periodic_gradient(const Grid& grid, std::span<const double> f) {
  require_grid_size(grid, f, "periodic_gradient");
  const std::size_t n = grid.size();
  const double inv_2h = 1.0 / (2.0 * grid.spacing());
  std::vector<double> out(n);
  out[0] = (f[1] - f[n - 1]) * inv_2h;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] - f[i - 1]) * inv_2h;
  out[n - 1] = (f[0] - f[n - 2]) * inv_2h;
  return out;
}

std::vector<double> periodic_laplacian(const Grid& grid, std::span<const double> f) {
  require_grid_size(grid, f, "periodic_laplacian");
  const std::size_t n = grid.size();
  const double inv_h2 = 1.0 / (grid.spacing() * grid.spacing());
  std::vector<double> out(n);
  out[0] = (f[1] + f[n - 1] - 2.0 * f[0]) * inv_h2;
  for (std::size_t i = 1; i + 1 < n; ++i) out[i] = (f[i + 1] + f[i - 1] - 2.0 * f[i]) * inv_h2;
  out[n - 1] = (f[0] + f[n - 2] - 2.0 * f[n - 1]) * inv_h2;
  return out;
}

}  // namespace gradflow
