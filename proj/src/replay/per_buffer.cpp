#include "ibsher/replay/per_buffer.hpp"

#include <algorithm>
#include <cmath>

namespace ibsher::replay {

void PerConfig::validate() const {
  if (!(alpha >= 0.0)) throw ConfigError("PER alpha must be >= 0");
  if (!(beta_init >= 0.0 && beta_init <= 1.0 && beta_final >= 0.0 && beta_final <= 1.0)) {
    throw ConfigError("PER beta must lie in [0, 1]");
  }
  if (!(priority_floor > 0.0)) throw ConfigError("PER priority floor must be positive");
}

double PerConfig::beta_at(std::uint64_t step, std::uint64_t total) const {
  if (total == 0) return beta_final;
  const double f = std::min(1.0, static_cast<double>(step) / static_cast<double>(total));
  return beta_init + f * (beta_final - beta_init);
}

PerBuffer::PerBuffer(std::size_t capacity, TransitionSchema schema, PerConfig config)
    : capacity_(capacity), schema_(schema), config_(config), tree_(capacity) {
  config_.validate();
}

namespace {
void put(std::vector<double>& store, std::size_t slot, const Vec& v) {
  const std::size_t dim = v.size();
  if (store.size() < (slot + 1) * dim) store.resize((slot + 1) * dim);
  std::copy(v.begin(), v.end(), store.begin() + static_cast<long>(slot * dim));
}
}  // namespace

void PerBuffer::store(const Transition& t) {
  schema_.check(t);
  const std::size_t slot = head_;
  put(obs_, slot, t.observation);
  put(next_obs_, slot, t.next_observation);
  put(goal_, slot, t.goal);
  put(action_, slot, t.action);
  put(ag_, slot, t.achieved_goal);
  put(next_ag_, slot, t.next_achieved_goal);
  put(reward_, slot, {t.reward});
  if (virtual_.size() <= slot) virtual_.resize(slot + 1);
  virtual_[slot] = t.is_virtual ? 1 : 0;
  tree_.set(slot, max_priority_);
  head_ = (head_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
}

Batch PerBuffer::sample(std::size_t k, double beta, Rng& rng) const {
  if (k == 0 || k > size_) throw PreconditionError("cannot sample more transitions than stored");
  const std::size_t od = schema_.observation_dim;
  const std::size_t gd = schema_.goal_dim;
  const std::size_t ad = schema_.action_dim;
  Batch b;
  b.indices.resize(k);
  b.weights.resize(static_cast<Eigen::Index>(k));
  b.obs_goal.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(od + gd));
  b.next_obs_goal.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(od + gd));
  b.action.resize(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(ad));
  b.reward.resize(static_cast<Eigen::Index>(k));

  const double total = tree_.total();
  const double segment = total / static_cast<double>(k);
  const double n = static_cast<double>(size_);
  // The largest weight belongs to the smallest priority in the buffer.
  const double max_weight = std::pow(n * tree_.min() / total, -beta);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t s = 0; s < k; ++s) {
    const double prefix = std::min((static_cast<double>(s) + u(rng)) * segment, std::nextafter(total, 0.0));
    const std::size_t slot = tree_.find_prefix(prefix);
    b.indices[s] = slot;
    const auto r = static_cast<Eigen::Index>(s);
    b.weights(r) = std::pow(n * tree_.get(slot) / total, -beta) / max_weight;
    for (std::size_t i = 0; i < od; ++i) {
      b.obs_goal(r, static_cast<Eigen::Index>(i)) = obs_[slot * od + i];
      b.next_obs_goal(r, static_cast<Eigen::Index>(i)) = next_obs_[slot * od + i];
    }
    for (std::size_t i = 0; i < gd; ++i) {
      b.obs_goal(r, static_cast<Eigen::Index>(od + i)) = goal_[slot * gd + i];
      b.next_obs_goal(r, static_cast<Eigen::Index>(od + i)) = goal_[slot * gd + i];
    }
    for (std::size_t i = 0; i < ad; ++i) b.action(r, static_cast<Eigen::Index>(i)) = action_[slot * ad + i];
    b.reward(r) = reward_[slot];
  }
  return b;
}

void PerBuffer::update_priorities(std::span<const std::size_t> indices, std::span<const double> td_errors) {
  if (indices.size() != td_errors.size()) throw ShapeError("one TD error is needed per index");
  for (std::size_t i = 0; i < indices.size(); ++i) {
    check_slot(indices[i]);
    if (!std::isfinite(td_errors[i])) throw NumericError("non-finite TD error in priority update");
    const double p = std::pow(std::abs(td_errors[i]) + config_.priority_floor, config_.alpha);
    tree_.set(indices[i], p);
    max_priority_ = std::max(max_priority_, p);
  }
}

std::vector<std::size_t> PerBuffer::slots_oldest_first() const {
  std::vector<std::size_t> out(size_);
  const std::size_t start = size_ < capacity_ ? 0 : head_;
  for (std::size_t i = 0; i < size_; ++i) out[i] = (start + i) % capacity_;
  return out;
}

void PerBuffer::check_slot(std::size_t slot) const {
  if (slot >= size_) throw PreconditionError("replay index out of range");
}

Transition PerBuffer::get(std::size_t slot) const {
  check_slot(slot);
  auto vec = [](std::span<const double> s) { return Vec(s.begin(), s.end()); };
  Transition t;
  t.observation = vec(row(obs_, schema_.observation_dim, slot));
  t.next_observation = vec(row(next_obs_, schema_.observation_dim, slot));
  t.goal = vec(row(goal_, schema_.goal_dim, slot));
  t.action = vec(row(action_, schema_.action_dim, slot));
  t.achieved_goal = vec(row(ag_, schema_.goal_dim, slot));
  t.next_achieved_goal = vec(row(next_ag_, schema_.goal_dim, slot));
  t.reward = reward_[slot];
  t.is_virtual = virtual_[slot] != 0;
  return t;
}

DumpRow PerBuffer::dump_row(std::size_t slot) const {
  check_slot(slot);
  const auto ag = row(ag_, schema_.goal_dim, slot);
  const auto g = row(goal_, schema_.goal_dim, slot);
  return {Vec(ag.begin(), ag.end()), Vec(g.begin(), g.end()), reward_[slot], virtual_[slot] != 0};
}

}  // namespace ibsher::replay
