#pragma once

#include <cstddef>
#include <vector>

namespace ibsher::replay {

/// Binary segment tree over `capacity` leaves keeping both sums and minima.
/// Unused leaves hold zero and are ignored by min().
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  void set(std::size_t leaf, double value);
  [[nodiscard]] double get(std::size_t leaf) const { return sums_[base_ + leaf]; }
  [[nodiscard]] double total() const { return sums_[1]; }
  /// Smallest value among leaves that have been set.
  [[nodiscard]] double min() const { return mins_[1]; }
  [[nodiscard]] std::size_t capacity() const { return capacity_; }

  /// Leaf whose cumulative interval contains `prefix`, for prefix in [0, total()).
  [[nodiscard]] std::size_t find_prefix(double prefix) const;

  /// Recomputes every internal node from the leaves.
  void rebuild();
  /// Largest |node - (left + right)| over internal nodes.
  [[nodiscard]] double max_inconsistency() const;

 private:
  std::size_t capacity_;
  std::size_t base_;
  std::vector<double> sums_;
  std::vector<double> mins_;
};

}  // namespace ibsher::replay
