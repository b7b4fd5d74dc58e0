#include "ibsher/envs/bit_flip.hpp"

#include <algorithm>

namespace ibsher::envs {

void BitFlipConfig::validate() const {
  if (n_bits < 1) throw ConfigError("bit-flip needs at least one bit");
  if (horizon < 0) throw ConfigError("bit-flip horizon must be >= 0");
}

BitFlipEnv::BitFlipEnv(BitFlipConfig cfg)
    : n_(static_cast<std::size_t>(cfg.n_bits)),
      horizon_(cfg.horizon > 0 ? cfg.horizon : cfg.n_bits + 2),
      low_(n_ + 1, -1.0),
      high_(n_ + 1, 1.0) {
  cfg.validate();
}

ResetResult BitFlipEnv::reset(Rng& rng) const {
  std::bernoulli_distribution coin(0.5);
  BitFlipState s;
  s.bits.resize(n_);
  for (auto& b : s.bits) b = coin(rng) ? 1 : 0;
  Vec goal(n_);
  for (auto& g : goal) g = coin(rng) ? 1.0 : 0.0;
  return {s, goal};
}

std::size_t BitFlipEnv::decode(std::span<const double> action) const {
  if (action.size() != n_ + 1) throw ShapeError("bit-flip action has the wrong dimension");
  return static_cast<std::size_t>(std::max_element(action.begin(), action.end()) - action.begin());
}

Vec BitFlipEnv::encode(std::size_t index) const {
  if (index > n_) throw PreconditionError("bit-flip action index out of range");
  Vec a(n_ + 1, -1.0);
  a[index] = 1.0;
  return a;
}

StepResult BitFlipEnv::step(const EnvState& state, std::span<const double> goal,
                            std::span<const double> action) const {
  BitFlipState s = std::get<BitFlipState>(state);
  if (goal.size() != n_) throw ShapeError("bit-flip goal has the wrong dimension");
  const std::size_t a = decode(clamp_action(action));
  if (!s.terminated) {
    if (a == n_) {
      s.terminated = true;
    } else {
      s.bits[a] ^= 1;
    }
  }
  ++s.steps;
  const double r = reward(achieved_goal(s), goal);
  const bool done = s.terminated || s.steps >= horizon_;
  return {std::move(s), r, done};
}

Vec BitFlipEnv::observe(const EnvState& state) const { return achieved_goal(state); }

Vec BitFlipEnv::achieved_goal(const EnvState& state) const {
  const auto& s = std::get<BitFlipState>(state);
  return Vec(s.bits.begin(), s.bits.end());
}

double BitFlipEnv::reward(std::span<const double> achieved, std::span<const double> desired) const {
  if (achieved.size() != desired.size() || achieved.size() != n_) {
    throw ShapeError("bit-flip reward needs two " + std::to_string(n_) + "-bit goals");
  }
  return std::equal(achieved.begin(), achieved.end(), desired.begin()) ? 0.0 : -1.0;
}

}  // namespace ibsher::envs
