#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "ibsher/goals/grid.hpp"

namespace ibsher::her {

struct IbsConfig {
  goals::GridSpec grid;
  double sigma_sq_init = 2.0;
  double sigma_sq_final = 0.2;
  double sigma_decay = 0.9;
  int anneal_period_cycles = 50;
  double weight_floor = 0.002;
  double target_floor = 0.002;

  void validate() const;
  /// max(final, init * decay^floor(cycles / period)).
  [[nodiscard]] double sigma_sq_at(std::int64_t completed_cycles) const;
};

/// Target grid q*, proposal counts over stored virtual goals, and the annealed kernel width.
class IbsState {
 public:
  /// q* is built from `target` at the initial sigma^2.
  IbsState(IbsConfig cfg, goals::GoalDistributionSpec target);
  /// Fixed q* (no rebuild on anneal) with the given counts; used for probes and tests.
  static IbsState from_parts(IbsConfig cfg, goals::GridDistribution target_q_star,
                             std::vector<std::uint64_t> counts = {});

  [[nodiscard]] const IbsConfig& config() const { return cfg_; }
  [[nodiscard]] const goals::GridDistribution& target_q_star() const { return q_star_; }
  [[nodiscard]] const std::vector<std::uint64_t>& proposal_counts() const { return counts_; }
  [[nodiscard]] std::uint64_t total_stored() const { return total_; }
  [[nodiscard]] double sigma_sq() const { return sigma_sq_; }

  /// count / |R| per cell; all zero while nothing is stored.
  [[nodiscard]] goals::GridDistribution proposal_distribution() const;
  void record_stored_goal(std::span<const double> vg);

  /// Sets sigma^2 for the number of completed cycles; rebuilds q* when it changes.
  /// Returns true on a rebuild.
  bool anneal_sigma(std::int64_t completed_cycles);

  [[nodiscard]] double weight(std::span<const double> g) const;
  [[nodiscard]] Vec weights(const std::vector<Vec>& candidates) const;
  /// w / sum(w). Throws PreconditionError on an empty candidate set.
  [[nodiscard]] Vec priorities(const std::vector<Vec>& candidates) const;

 private:
  IbsState() = default;

  IbsConfig cfg_;
  std::optional<goals::GoalDistributionSpec> spec_;
  goals::GridDistribution q_star_;
  std::vector<std::uint64_t> counts_;
  std::uint64_t total_ = 0;
  double sigma_sq_ = 2.0;
};

}  // namespace ibsher::her
