#pragma once

#include <array>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "ibsher/common.hpp"
#include "ibsher/goals/distribution.hpp"

namespace ibsher::envs {

using Vec2 = std::array<double, 2>;

enum class Gripper { open, closed };

struct ThrowState {
  Vec2 hand_pos{};
  Vec2 hand_vel{};
  Gripper gripper = Gripper::open;
  Vec2 ball_pos{};
  Vec2 ball_vel{};
  bool held = false;
  int steps = 0;
};

struct RobotState {
  Vec2 theta{};
  Vec2 theta_dot{};
  Vec2 ee_pos{};
  Vec2 ee_vel{};
  Gripper gripper = Gripper::open;
  Vec2 ball_pos{};
  Vec2 ball_vel{};
  bool held = false;
  int steps = 0;
};

struct BitFlipState {
  std::vector<int> bits;
  bool terminated = false;
  int steps = 0;
};

using EnvState = std::variant<ThrowState, RobotState, BitFlipState>;

struct StepResult {
  EnvState state;
  double reward = -1.0;
  bool done = false;
};

struct ResetResult {
  EnvState state;
  Vec goal;
};

/// Goal-conditioned environment. `step` is a pure function of (state, goal, action);
/// randomness enters only through `reset`.
class Environment {
 public:
  virtual ~Environment() = default;

  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t observation_dim() const = 0;
  [[nodiscard]] virtual std::size_t action_dim() const = 0;
  [[nodiscard]] virtual std::size_t goal_dim() const = 0;
  [[nodiscard]] virtual const Vec& action_low() const = 0;
  [[nodiscard]] virtual const Vec& action_high() const = 0;
  /// Coordinates decoded as a two-state switch (thresholded at 0 after exploration noise).
  [[nodiscard]] virtual std::vector<bool> binary_actions() const = 0;
  [[nodiscard]] virtual double success_epsilon() const = 0;
  [[nodiscard]] virtual int horizon() const = 0;

  [[nodiscard]] virtual ResetResult reset(Rng& rng) const = 0;
  [[nodiscard]] ResetResult reset(std::uint64_t seed) const {
    Rng rng(seed);
    return reset(rng);
  }
  [[nodiscard]] virtual StepResult step(const EnvState& state, std::span<const double> goal,
                                        std::span<const double> action) const = 0;
  [[nodiscard]] virtual Vec observe(const EnvState& state) const = 0;
  [[nodiscard]] virtual Vec achieved_goal(const EnvState& state) const = 0;
  /// 0 when `achieved` satisfies `desired`, -1 otherwise. Depends on nothing else.
  [[nodiscard]] virtual double reward(std::span<const double> achieved,
                                      std::span<const double> desired) const = 0;
  /// Density of desired goals, when it lives in a continuous 2D space.
  [[nodiscard]] virtual std::optional<goals::GoalDistributionSpec> goal_distribution() const = 0;

  [[nodiscard]] double distance(std::span<const double> achieved, std::span<const double> desired) const;
  [[nodiscard]] Vec clamp_action(std::span<const double> action) const;
};

}  // namespace ibsher::envs
