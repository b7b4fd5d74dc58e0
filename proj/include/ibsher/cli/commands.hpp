#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ibsher/cli/run_config.hpp"
#include "ibsher/metrics/curves.hpp"
#include "ibsher/metrics/evaluation.hpp"

namespace ibsher::cli {

/// $IBSHER_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path output_root();
/// run.output_dir when set, else <output root>/<env>_<variant>_s<seed>.
std::filesystem::path run_directory(const RunConfig& cfg);

struct TrainOptions {
  std::filesystem::path config;  // empty: start from defaults
  std::vector<std::string> overrides;
  bool overwrite = false;
};

/// Trains and writes config.json, curves.csv, checkpoints/, heatmaps/ and buffer-dump.csv.
/// Everything lands in a sibling temp directory that is renamed into place at the end.
std::filesystem::path cmd_train(const TrainOptions& opt, std::ostream& log);

/// Writes a finished run into `dir`; shared by train and the tests.
void write_run_directory(const std::filesystem::path& dir, const RunConfig& cfg,
                         const ddpg::RunArtifacts& run, bool overwrite);

inline constexpr const char* kEvalHeader =
    "epoch,success_rate,final_success_rate,mean_final_distance,q0_estimate,empirical_return,kl_to_target,"
    "n_episodes";

struct EvalOptions {
  std::filesystem::path actor;
  std::filesystem::path critic;  // optional; without it q0_estimate is NaN
  std::filesystem::path env_config;
  std::vector<std::string> overrides;
  int n_episodes = 50;
  std::uint64_t seed = 0;
  std::filesystem::path out;  // optional one-row CSV
};

metrics::EvalReport cmd_eval(const EvalOptions& opt, std::ostream& out);
void write_eval_csv(std::ostream& out, const metrics::EvalReport& r);

struct VgdistOptions {
  std::string dist;  // "uniform:x0,x1,y0,y1" or a path to a GMM JSON file
  double sigma = 0.2;
  int rows = 20;
  int cols = 20;
  std::string bounds = "0,1,0,1";
  double floor = 0.002;
  std::filesystem::path out;        // target grid CSV; stdout when empty
  std::filesystem::path from_dump;  // optional buffer dump
  std::filesystem::path proposal_out;
  bool reverse = false;
};

struct VgdistResult {
  goals::GridDistribution target;
  std::optional<metrics::VgReport> proposal;
};

/// Parses the --dist argument into a goal density.
goals::GoalDistributionSpec parse_distribution(const std::string& dist);
goals::GridSpec parse_grid(int rows, int cols, const std::string& bounds);
VgdistResult cmd_vgdist(const VgdistOptions& opt, std::ostream& out);

struct BiasRow {
  std::uint64_t seed = 0;
  her::Variant variant = her::Variant::her;
  double final_success = 0.0;
  double q0_estimate = 0.0;
  double empirical_return = 0.0;
  std::size_t misleading_transitions = 0;
  [[nodiscard]] double bias() const { return q0_estimate - empirical_return; }
};

struct BiasSummary {
  double median_bias_her = 0.0;
  double median_bias_filtered = 0.0;
  int seeds_bias_her_gt_filtered = 0;
  int seeds_success_filtered_ge_her = 0;
};

struct BiasStudy {
  std::vector<BiasRow> rows;  // HER then Filtered-HER for each seed
  BiasSummary summary;
};

/// HER against Filtered-HER on bit-flip, one run per seed and variant. `base` must be a
/// bit-flip config; its variant and seed are replaced.
BiasStudy run_bias_study(const RunConfig& base, const std::vector<std::uint64_t>& seeds,
                         std::ostream* log = nullptr);
void write_bias_study(std::ostream& out, const BiasStudy& study);

struct BiasStudyOptions {
  std::vector<std::uint64_t> seeds;
  std::filesystem::path config;
  std::vector<std::string> overrides;
  std::filesystem::path out;  // stdout when empty
};

BiasStudy cmd_bias_study(const BiasStudyOptions& opt, std::ostream& out, std::ostream& log);

/// Per-epoch p33/p50/p67 across curves or eval CSVs.
metrics::Table cmd_aggregate(const std::vector<std::filesystem::path>& inputs, const std::filesystem::path& out,
                             std::ostream& stdout_stream);

}  // namespace ibsher::cli
