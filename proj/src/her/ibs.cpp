#include "ibsher/her/ibs.hpp"

#include <algorithm>
#include <cmath>

namespace ibsher::her {

void IbsConfig::validate() const {
  grid.validate();
  if (!(sigma_sq_init > 0.0 && sigma_sq_final > 0.0)) throw ConfigError("sigma^2 must be positive");
  if (sigma_sq_final > sigma_sq_init) throw ConfigError("sigma_sq_final must not exceed sigma_sq_init");
  if (!(sigma_decay > 0.0 && sigma_decay <= 1.0)) throw ConfigError("sigma_decay must lie in (0, 1]");
  if (anneal_period_cycles < 1) throw ConfigError("anneal_period_cycles must be >= 1");
  if (!(weight_floor > 0.0)) throw ConfigError("weight_floor must be positive");
  if (!(target_floor >= 0.0) || target_floor * static_cast<double>(grid.cells()) >= 1.0) {
    throw ConfigError("target_floor * cells must be below 1");
  }
}

double IbsConfig::sigma_sq_at(std::int64_t completed_cycles) const {
  if (completed_cycles < 0) throw PreconditionError("completed_cycles must be >= 0");
  const auto steps = static_cast<double>(completed_cycles / anneal_period_cycles);
  return std::max(sigma_sq_final, sigma_sq_init * std::pow(sigma_decay, steps));
}

IbsState::IbsState(IbsConfig cfg, goals::GoalDistributionSpec target)
    : cfg_(std::move(cfg)), spec_(std::move(target)) {
  cfg_.validate();
  sigma_sq_ = cfg_.sigma_sq_init;
  q_star_ = goals::build_target_grid(*spec_, std::sqrt(sigma_sq_), cfg_.grid, cfg_.target_floor);
  counts_.assign(cfg_.grid.cells(), 0);
}

IbsState IbsState::from_parts(IbsConfig cfg, goals::GridDistribution target_q_star,
                              std::vector<std::uint64_t> counts) {
  cfg.validate();
  if (target_q_star.values.size() != cfg.grid.cells()) throw ShapeError("q* does not match the grid");
  if (!target_q_star.is_distribution()) throw PreconditionError("q* must be a distribution");
  IbsState s;
  s.cfg_ = std::move(cfg);
  s.q_star_ = std::move(target_q_star);
  s.q_star_.grid = s.cfg_.grid;
  s.sigma_sq_ = s.cfg_.sigma_sq_init;
  if (counts.empty()) counts.assign(s.cfg_.grid.cells(), 0);
  if (counts.size() != s.cfg_.grid.cells()) throw ShapeError("counts do not match the grid");
  s.counts_ = std::move(counts);
  for (auto c : s.counts_) s.total_ += c;
  return s;
}

goals::GridDistribution IbsState::proposal_distribution() const {
  goals::GridDistribution q{cfg_.grid, std::vector<double>(counts_.size(), 0.0)};
  if (total_ == 0) return q;
  const auto n = static_cast<double>(total_);
  for (std::size_t k = 0; k < counts_.size(); ++k) q.values[k] = static_cast<double>(counts_[k]) / n;
  return q;
}

void IbsState::record_stored_goal(std::span<const double> vg) {
  ++counts_[cfg_.grid.bin(vg)];
  ++total_;
}

bool IbsState::anneal_sigma(std::int64_t completed_cycles) {
  const double next = cfg_.sigma_sq_at(completed_cycles);
  if (next == sigma_sq_) return false;
  sigma_sq_ = next;
  if (!spec_) return false;
  q_star_ = goals::build_target_grid(*spec_, std::sqrt(sigma_sq_), cfg_.grid, cfg_.target_floor);
  return true;
}

double IbsState::weight(std::span<const double> g) const {
  const std::size_t cell = cfg_.grid.bin(g);
  const double q = total_ == 0 ? 0.0 : static_cast<double>(counts_[cell]) / static_cast<double>(total_);
  return std::max(q_star_.values[cell] - q, cfg_.weight_floor);
}

Vec IbsState::weights(const std::vector<Vec>& candidates) const {
  Vec w;
  w.reserve(candidates.size());
  for (const auto& g : candidates) w.push_back(weight(g));
  return w;
}

Vec IbsState::priorities(const std::vector<Vec>& candidates) const {
  if (candidates.empty()) throw PreconditionError("IBS priorities need at least one candidate");
  Vec p = weights(candidates);
  double s = 0.0;
  for (double v : p) s += v;
  for (double& v : p) v /= s;
  return p;
}

}  // namespace ibsher::her
