#include "ibsher/metrics/curves.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "ibsher/common.hpp"

namespace ibsher::metrics {

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int precision = 6; precision <= 17; ++precision) {
    std::snprintf(buf, sizeof(buf), "%.*g", precision, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

void write_learning_curves(std::ostream& out, const std::vector<CurveRow>& rows) {
  out << kCurvesHeader << '\n';
  for (const auto& r : rows) {
    out << r.epoch << ',' << format_real(r.success_rate) << ',' << format_real(r.mean_final_distance) << ','
        << format_real(r.q0_estimate) << ',' << format_real(r.empirical_return) << ','
        << format_real(r.epsilon) << ',' << format_real(r.kl_to_target) << ',' << format_real(r.sigma_sq)
        << '\n';
  }
  if (!out) throw IoError("failed writing learning curves");
}

void write_learning_curves(const std::filesystem::path& path, const std::vector<CurveRow>& rows) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  write_learning_curves(out, rows);
}

std::size_t Table::column(const std::string& name) const {
  const auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw IoError("CSV has no column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {
double parse_cell(const std::string& s) {
  if (s == "nan" || s == "NaN" || s.empty()) return std::nan("");
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str()) throw IoError("non-numeric CSV cell '" + s + "'");
  return v;
}
}  // namespace

Table read_table(std::istream& in) {
  Table t;
  std::string line;
  if (!std::getline(in, line)) throw IoError("CSV is empty");
  {
    std::istringstream hs(line);
    for (std::string c; std::getline(hs, c, ',');) t.header.push_back(c);
  }
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::vector<double> row;
    for (std::string c; std::getline(ls, c, ',');) row.push_back(parse_cell(c));
    if (row.size() != t.header.size()) throw IoError("CSV row width does not match its header");
    t.rows.push_back(std::move(row));
  }
  return t;
}

Table load_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  return read_table(in);
}

void write_table(std::ostream& out, const Table& t) {
  for (std::size_t i = 0; i < t.header.size(); ++i) out << (i ? "," : "") << t.header[i];
  out << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_real(row[i]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing CSV");
}

double percentile(std::vector<double> values, double p) {
  std::erase_if(values, [](double v) { return std::isnan(v); });
  if (values.empty()) return std::nan("");
  if (!(p >= 0.0 && p <= 100.0)) throw PreconditionError("percentile must lie in [0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = p / 100.0 * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, values.size() - 1);
  const double frac = rank - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

Table aggregate_runs(const std::vector<Table>& runs) {
  if (runs.empty()) throw PreconditionError("nothing to aggregate");
  const auto& header = runs.front().header;
  for (const auto& r : runs) {
    if (r.header != header) throw IoError("aggregated CSVs must share one header");
  }
  const std::size_t epoch_col = runs.front().column("epoch");
  std::map<double, std::vector<std::vector<double>>> by_epoch;
  for (const auto& r : runs) {
    for (const auto& row : r.rows) by_epoch[row[epoch_col]].push_back(row);
  }
  Table out;
  out.header.push_back("epoch");
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c == epoch_col) continue;
    for (const char* suffix : {"_p33", "_p50", "_p67"}) out.header.push_back(header[c] + suffix);
  }
  for (const auto& [epoch, rows] : by_epoch) {
    std::vector<double> line{epoch};
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c == epoch_col) continue;
      std::vector<double> column;
      for (const auto& row : rows) column.push_back(row[c]);
      for (double p : {33.0, 50.0, 67.0}) line.push_back(percentile(column, p));
    }
    out.rows.push_back(std::move(line));
  }
  return out;
}

}  // namespace ibsher::metrics
