#include "ibsher/replay/transition.hpp"

#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ibsher::replay {

void TransitionSchema::check(const Transition& t) const {
  if (t.observation.size() != observation_dim || t.next_observation.size() != observation_dim) {
    throw ShapeError("transition observation does not match the buffer schema");
  }
  if (t.goal.size() != goal_dim || t.achieved_goal.size() != goal_dim ||
      t.next_achieved_goal.size() != goal_dim) {
    throw ShapeError("transition goal does not match the buffer schema");
  }
  if (t.action.size() != action_dim) throw ShapeError("transition action does not match the buffer schema");
  if (t.reward != 0.0 && t.reward != -1.0) throw PreconditionError("reward must be 0 or -1");
}

void write_dump_header(std::ostream& out, std::size_t goal_dim) {
  for (std::size_t i = 0; i < goal_dim; ++i) out << "achieved_goal_" << i << ',';
  for (std::size_t i = 0; i < goal_dim; ++i) out << "goal_" << i << ',';
  out << "reward,is_virtual\n";
}

void write_dump_row(std::ostream& out, const DumpRow& row) {
  char buf[32];
  for (double v : row.achieved_goal) {
    std::snprintf(buf, sizeof(buf), "%.17g,", v);
    out << buf;
  }
  for (double v : row.goal) {
    std::snprintf(buf, sizeof(buf), "%.17g,", v);
    out << buf;
  }
  out << (row.reward == 0.0 ? "0" : "-1") << ',' << (row.is_virtual ? 1 : 0) << '\n';
}

std::vector<DumpRow> read_dump(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("buffer dump is empty");
  std::size_t goal_dim = 0;
  {
    std::istringstream hs(line);
    for (std::string col; std::getline(hs, col, ',');) {
      if (col.rfind("goal_", 0) == 0) ++goal_dim;
    }
  }
  if (goal_dim == 0) throw IoError("buffer dump header has no goal columns");
  std::vector<DumpRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::vector<double> cells;
    for (std::string c; std::getline(ls, c, ',');) cells.push_back(std::stod(c));
    if (cells.size() != 2 * goal_dim + 2) throw IoError("malformed buffer dump row");
    DumpRow r;
    r.achieved_goal.assign(cells.begin(), cells.begin() + static_cast<long>(goal_dim));
    r.goal.assign(cells.begin() + static_cast<long>(goal_dim), cells.begin() + static_cast<long>(2 * goal_dim));
    r.reward = cells[2 * goal_dim];
    r.is_virtual = cells[2 * goal_dim + 1] != 0.0;
    rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<DumpRow> load_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open buffer dump " + path.string());
  return read_dump(in);
}

}  // namespace ibsher::replay
