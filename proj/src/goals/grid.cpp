#include "ibsher/goals/grid.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace ibsher::goals {

void GridSpec::validate() const {
  if (rows < 1 || cols < 1) throw ConfigError("grid needs at least one row and one column");
  if (!(x1 > x0) || !(y1 > y0)) throw ConfigError("grid bounds must have positive extent");
}

Vec GridSpec::cell_center(int i, int j) const {
  const double w = (x1 - x0) / cols;
  const double h = (y1 - y0) / rows;
  return {x0 + (j + 0.5) * w, y0 + (i + 0.5) * h};
}

std::size_t GridSpec::bin(std::span<const double> g) const {
  if (g.size() != 2) throw ShapeError("grid binning needs a 2D goal");
  auto index = [](double v, double lo, double hi, int n) {
    const double f = std::floor((v - lo) / (hi - lo) * n);
    if (!(f >= 0.0)) return 0;  // also catches NaN
    return std::min(static_cast<int>(std::min(f, 1e9)), n - 1);
  };
  const int j = index(g[0], x0, x1, cols);
  const int i = index(g[1], y0, y1, rows);
  return static_cast<std::size_t>(i) * cols + j;
}

double GridDistribution::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

bool GridDistribution::is_distribution(double tol) const {
  if (values.size() != grid.cells()) return false;
  for (double v : values) {
    if (!(v >= 0.0)) return false;
  }
  return std::abs(sum() - 1.0) <= tol;
}

GridDistribution build_target_grid(const GoalDistributionSpec& spec, double sigma,
                                   const GridSpec& grid, double floor) {
  grid.validate();
  spec.validate();
  if (spec.dim() != 2) throw ConfigError("target grids need a 2D goal distribution");
  if (!(floor >= 0.0) || floor * static_cast<double>(grid.cells()) >= 1.0) {
    throw ConfigError("floor * cells must be below 1");
  }

  GridDistribution out{grid, std::vector<double>(grid.cells())};
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      out.values[static_cast<std::size_t>(i) * grid.cols + j] = score(spec, grid.cell_center(i, j), sigma);
    }
  }
  const double total = out.sum();
  if (!(total > 0.0) || !std::isfinite(total)) throw ConfigError("target scores are all zero");
  for (double& v : out.values) v /= total;

  // Water-fill: find c with sum(max(floor, c * mu)) = 1. Cells pinned at the floor stay
  // there; the rest share the remaining mass in proportion to their score.
  std::vector<double> mu = out.values;
  std::vector<double> sorted = mu;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  std::vector<double> suffix(n + 1, 0.0);
  for (std::size_t k = n; k-- > 0;) suffix[k] = suffix[k + 1] + sorted[k];
  double scale = 1.0;
  for (std::size_t pinned = 0; pinned < n; ++pinned) {
    const double free_mass = 1.0 - floor * static_cast<double>(pinned);
    const double c = free_mass / suffix[pinned];
    const bool lower_ok = c * sorted[pinned] >= floor;
    const bool upper_ok = pinned == 0 || c * sorted[pinned - 1] <= floor;
    if (lower_ok && upper_ok) {
      scale = c;
      break;
    }
  }
  for (std::size_t k = 0; k < n; ++k) out.values[k] = std::max(floor, scale * mu[k]);
  const double s = out.sum();
  for (double& v : out.values) v /= s;  // absorbs rounding only
  return out;
}

GridDistribution histogram(const GridSpec& grid, const std::vector<Vec>& goals) {
  grid.validate();
  GridDistribution out{grid, std::vector<double>(grid.cells(), 0.0)};
  for (const auto& g : goals) out.values[grid.bin(g)] += 1.0;
  if (!goals.empty()) {
    for (double& v : out.values) v /= static_cast<double>(goals.size());
  }
  return out;
}

double kl_divergence(const GridDistribution& p, const GridDistribution& q) {
  if (p.grid.rows != q.grid.rows || p.grid.cols != q.grid.cols || p.values.size() != q.values.size()) {
    throw ShapeError("KL divergence between grids of different shape");
  }
  double kl = 0.0;
  for (std::size_t k = 0; k < p.values.size(); ++k) {
    const double pk = p.values[k];
    if (pk > 0.0) kl += pk * std::log(pk / std::max(q.values[k], kKlFloor));
  }
  return std::max(kl, 0.0);
}

void write_grid_csv(std::ostream& out, const GridDistribution& dist, double sigma,
                    const std::string& kind) {
  const auto& g = dist.grid;
  char buf[64];
  out << "# kind=" << kind << " rows=" << g.rows << " cols=" << g.cols;
  std::snprintf(buf, sizeof(buf), " x0=%.17g x1=%.17g", g.x0, g.x1);
  out << buf;
  std::snprintf(buf, sizeof(buf), " y0=%.17g y1=%.17g", g.y0, g.y1);
  out << buf;
  std::snprintf(buf, sizeof(buf), " sigma=%.17g", sigma);
  out << buf << '\n';
  for (int i = 0; i < g.rows; ++i) {
    for (int j = 0; j < g.cols; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dist.at(i, j));
      out << (j ? "," : "") << buf;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing grid CSV");
}

void save_grid_csv(const std::filesystem::path& path, const GridDistribution& dist, double sigma,
                   const std::string& kind) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_grid_csv(out, dist, sigma, kind);
}

GridDistribution read_grid_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.empty() || line[0] != '#') throw IoError("grid CSV lacks header");
  GridSpec g;
  std::istringstream hs(line.substr(1));
  for (std::string kv; hs >> kv;) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    if (key == "rows") g.rows = std::stoi(val);
    else if (key == "cols") g.cols = std::stoi(val);
    else if (key == "x0") g.x0 = std::stod(val);
    else if (key == "x1") g.x1 = std::stod(val);
    else if (key == "y0") g.y0 = std::stod(val);
    else if (key == "y1") g.y1 = std::stod(val);
  }
  g.validate();
  GridDistribution d{g, {}};
  d.values.reserve(g.cells());
  for (int i = 0; i < g.rows; ++i) {
    if (!std::getline(in, line)) throw IoError("grid CSV truncated");
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) d.values.push_back(std::stod(cell));
  }
  if (d.values.size() != g.cells()) throw IoError("grid CSV has the wrong number of cells");
  return d;
}

}  // namespace ibsher::goals
