#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace gradflow {

// Uniform periodic grid on [-pi, pi). Point i sits at -pi + i*h with h = 2*pi/n,
// and index 0 neighbors index n-1.
class Grid {
 public:
  static constexpr std::size_t kMinPoints = 8;

  // Throws std::invalid_argument when n < kMinPoints.
  explicit Grid(std::size_t n);

  std::size_t size() const { return n_; }
  double spacing() const { return h_; }
  std::span<const double> points() const { return *points_; }
  double point(std::size_t i) const { return (*points_)[i]; }

  // Grids are identified by their point count; the domain is fixed.
  bool operator==(const Grid& other) const { return n_ == other.n_; }

 private:
  std::size_t n_;
  double h_;
  std::shared_ptr<const std::vector<double>> points_;
};

Grid make_grid(std::size_t n);

// Rectangle rule h * sum(values). On a uniform periodic grid this coincides
// with the trapezoid rule. Rejects size mismatch and non-finite input.
double quadrature(const Grid& grid, std::span<const double> values);

// Central difference (f[i+1] - f[i-1]) / (2h) with wrap-around indices.
std::vector<double> periodic_gradient(const Grid& grid, std::span<const double> f);

// Three-point stencil (f[i+1] + f[i-1] - 2 f[i]) / h^2 with wrap-around indices.
std::vector<double> periodic_laplacian(const Grid& grid, std::span<const double> f);

// Throws std::invalid_argument unless values.size() == grid.size().
void require_grid_size(const Grid& grid, std::span<const double> values, const char* what);

}  // namespace gradflow
