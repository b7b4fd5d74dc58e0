#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace ibsher::metrics {

struct CurveRow {
  int epoch = 0;
  double success_rate = 0.0;
  double mean_final_distance = 0.0;
  double q0_estimate = 0.0;
  double empirical_return = 0.0;
  double epsilon = 0.0;
  double kl_to_target = 0.0;
  double sigma_sq = 0.0;
};

inline constexpr const char* kCurvesHeader =
    "epoch,success_rate,mean_final_distance,q0_estimate,empirical_return,epsilon,kl_to_target,sigma_sq";

/// Shortest round-trip decimal; NaN prints as "nan".
std::string format_real(double v);

void write_learning_curves(std::ostream& out, const std::vector<CurveRow>& rows);
void write_learning_curves(const std::filesystem::path& path, const std::vector<CurveRow>& rows);

/// Generic numeric CSV with a header row.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  [[nodiscard]] std::size_t column(const std::string& name) const;
};

Table read_table(std::istream& in);
Table load_table(const std::filesystem::path& path);
void write_table(std::ostream& out, const Table& t);

/// Linear-interpolation percentile (rank p/100 * (n - 1) between order statistics),
/// ignoring NaNs. NaN when nothing is left.
double percentile(std::vector<double> values, double p);

/// Per-epoch p33/p50/p67 of every metric column across runs. Input tables must carry an
/// `epoch` column; output columns are epoch, <metric>_p33, <metric>_p50, <metric>_p67, ...
Table aggregate_runs(const std::vector<Table>& runs);

}  // namespace ibsher::metrics
