#pragma once

#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ibsher/common.hpp"

namespace ibsher::replay {

/// One experience tuple. `achieved_goal` is taken at the state the action was taken from,
/// `next_achieved_goal` at the state it led to.
struct Transition {
  Vec observation;
  Vec goal;
  Vec action;
  double reward = -1.0;
  Vec next_observation;
  Vec achieved_goal;
  Vec next_achieved_goal;
  bool is_virtual = false;
};

struct TransitionSchema {
  std::size_t observation_dim = 0;
  std::size_t goal_dim = 0;
  std::size_t action_dim = 0;

  /// Throws ShapeError when `t` does not fit, PreconditionError for a reward outside {-1, 0}.
  void check(const Transition& t) const;
};

/// Diagnostic dump row. Columns: achieved_goal_*, goal_*, reward, is_virtual.
struct DumpRow {
  Vec achieved_goal;
  Vec goal;
  double reward = -1.0;
  bool is_virtual = false;
};

void write_dump_header(std::ostream& out, std::size_t goal_dim);
void write_dump_row(std::ostream& out, const DumpRow& row);
std::vector<DumpRow> read_dump(std::istream& in);
std::vector<DumpRow> load_dump(const std::filesystem::path& path);

}  // namespace ibsher::replay
