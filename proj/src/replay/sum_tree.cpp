#include "ibsher/replay/sum_tree.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ibsher/common.hpp"

namespace ibsher::replay {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

SumTree::SumTree(std::size_t capacity) : capacity_(capacity), base_(1) {
  if (capacity == 0) throw ConfigError("sum tree capacity must be positive");
  while (base_ < capacity) base_ <<= 1;
  sums_.assign(2 * base_, 0.0);
  mins_.assign(2 * base_, kInf);
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= capacity_) throw PreconditionError("sum tree leaf out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw NumericError("sum tree priority must be finite and >= 0");
  std::size_t node = base_ + leaf;
  sums_[node] = value;
  mins_[node] = value;
  for (node >>= 1; node >= 1; node >>= 1) {
    sums_[node] = sums_[2 * node] + sums_[2 * node + 1];
    mins_[node] = std::min(mins_[2 * node], mins_[2 * node + 1]);
  }
}

std::size_t SumTree::find_prefix(double prefix) const {
  std::size_t node = 1;
  while (node < base_) {
    const double left = sums_[2 * node];
    if (prefix < left || sums_[2 * node + 1] <= 0.0) {
      node = 2 * node;
    } else {
      prefix -= left;
      node = 2 * node + 1;
    }
  }
  std::size_t leaf = node - base_;
  // Rounding can land on an empty trailing leaf; step back to the last populated one.
  while (leaf > 0 && sums_[base_ + leaf] <= 0.0) --leaf;
  return std::min(leaf, capacity_ - 1);
}

void SumTree::rebuild() {
  for (std::size_t node = base_ - 1; node >= 1; --node) {
    sums_[node] = sums_[2 * node] + sums_[2 * node + 1];
    mins_[node] = std::min(mins_[2 * node], mins_[2 * node + 1]);
  }
}

double SumTree::max_inconsistency() const {
  double worst = 0.0;
  for (std::size_t node = 1; node < base_; ++node) {
    worst = std::max(worst, std::abs(sums_[node] - (sums_[2 * node] + sums_[2 * node + 1])));
  }
  return worst;
}

}  // namespace ibsher::replay
