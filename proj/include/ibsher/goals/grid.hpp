#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ibsher/goals/distribution.hpp"

namespace ibsher::goals {

/// M x N cells over a 2D goal rectangle. Row i runs along y (row 0 at y0), column j along x.
struct GridSpec {
  int rows = 20;
  int cols = 20;
  double x0 = 0.0, x1 = 1.0;
  double y0 = 0.0, y1 = 1.0;

  void validate() const;
  [[nodiscard]] std::size_t cells() const { return static_cast<std::size_t>(rows) * cols; }
  [[nodiscard]] Vec cell_center(int i, int j) const;
  /// Flat row-major index of the cell holding `g`; out-of-range goals clamp to edge cells.
  [[nodiscard]] std::size_t bin(std::span<const double> g) const;
};

/// Nonnegative values over a grid, row-major. Proposal grids may be all zero before
/// anything is stored; everything else sums to one.
struct GridDistribution {
  GridSpec grid;
  std::vector<double> values;

  [[nodiscard]] double at(int i, int j) const { return values[static_cast<std::size_t>(i) * grid.cols + j]; }
  [[nodiscard]] double sum() const;
  [[nodiscard]] bool is_distribution(double tol = 1e-9) const;
};

/// Scores every cell centre against `spec`, normalizes, then raises cells to `floor`
/// while keeping the total at one. Every output cell is >= floor.
GridDistribution build_target_grid(const GoalDistributionSpec& spec, double sigma,
                                   const GridSpec& grid, double floor);

/// Normalized histogram of `goals`; all zero when `goals` is empty.
GridDistribution histogram(const GridSpec& grid, const std::vector<Vec>& goals);

/// KL(p || q) in nats, skipping cells where p is zero; q is floored at 1e-12.
double kl_divergence(const GridDistribution& p, const GridDistribution& q);

inline constexpr double kKlFloor = 1e-12;

/// Heatmap CSV: one '#' header line with bounds and sigma, then `rows` lines of `cols` values.
void write_grid_csv(std::ostream& out, const GridDistribution& dist, double sigma,
                    const std::string& kind);
void save_grid_csv(const std::filesystem::path& path, const GridDistribution& dist, double sigma,
                   const std::string& kind);
GridDistribution read_grid_csv(std::istream& in);

}  // namespace ibsher::goals
