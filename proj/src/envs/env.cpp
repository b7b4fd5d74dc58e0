#include "ibsher/envs/env.hpp"

#include <algorithm>
#include <cmath>

namespace ibsher::envs {

double Environment::distance(std::span<const double> achieved, std::span<const double> desired) const {
  return std::sqrt(squared_distance(achieved, desired));
}

Vec Environment::clamp_action(std::span<const double> action) const {
  if (action.size() != action_dim()) throw ShapeError("action has the wrong dimension");
  const Vec& lo = action_low();
  const Vec& hi = action_high();
  Vec out(action.size());
  for (std::size_t i = 0; i < action.size(); ++i) {
    const double a = std::isnan(action[i]) ? 0.0 : action[i];
    out[i] = std::clamp(a, lo[i], hi[i]);
  }
  return out;
}

}  // namespace ibsher::envs
