#pragma once

#include <Eigen/Dense>

#include <span>
#include <vector>

#include "ibsher/common.hpp"
#include "ibsher/replay/sum_tree.hpp"
#include "ibsher/replay/transition.hpp"

namespace ibsher::replay {

struct PerConfig {
  double alpha = 0.6;
  double beta_init = 0.4;
  double beta_final = 1.0;
  double priority_floor = 1e-3;

  void validate() const;
  /// Linear anneal from beta_init to beta_final over `total` steps.
  [[nodiscard]] double beta_at(std::uint64_t step, std::uint64_t total) const;
};

/// Minibatch in network-ready form: inputs are observation || goal.
struct Batch {
  std::vector<std::size_t> indices;
  Eigen::VectorXd weights;     // importance weights, max-normalized
  Eigen::MatrixXd obs_goal;
  Eigen::MatrixXd action;
  Eigen::VectorXd reward;
  Eigen::MatrixXd next_obs_goal;
};

/// Ring buffer with proportional prioritized sampling. Storage is struct-of-arrays and grows
/// lazily up to `capacity`; once full, the oldest transition is overwritten first.
class PerBuffer {
 public:
  PerBuffer(std::size_t capacity, TransitionSchema schema, PerConfig config = {});

  void store(const Transition& t);

  /// Stratified sampling proportional to leaf priority. Throws PreconditionError if k > size().
  [[nodiscard]] Batch sample(std::size_t k, double beta, Rng& rng) const;

  /// leaf <- (|td| + floor)^alpha for each index.
  void update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors);

  [[nodiscard]] std::size_t size() const { return size_; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }
  [[nodiscard]] const TransitionSchema& schema() const { return schema_; }
  [[nodiscard]] const PerConfig& config() const { return config_; }
  [[nodiscard]] double priority(std::size_t slot) const { return tree_.get(slot); }
  [[nodiscard]] double max_priority() const { return max_priority_; }
  [[nodiscard]] const SumTree& tree() const { return tree_; }

  /// Slots in insertion order, oldest first.
  [[nodiscard]] std::vector<std::size_t> slots_oldest_first() const;
  [[nodiscard]] Transition get(std::size_t slot) const;
  [[nodiscard]] DumpRow dump_row(std::size_t slot) const;
  [[nodiscard]] bool is_virtual(std::size_t slot) const { return virtual_[slot] != 0; }

 private:
  [[nodiscard]] std::span<const double> row(const std::vector<double>& store, std::size_t dim,
                                            std::size_t slot) const {
    return {store.data() + slot * dim, dim};
  }
  void check_slot(std::size_t slot) const;

  std::size_t capacity_;
  TransitionSchema schema_;
  PerConfig config_;
  SumTree tree_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;
  double max_priority_ = 1.0;

  std::vector<double> obs_, next_obs_, goal_, action_, ag_, next_ag_, reward_;
  std::vector<char> virtual_;
};

}  // namespace ibsher::replay
