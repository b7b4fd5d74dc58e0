#pragma once

#include "ibsher/envs/env.hpp"

namespace ibsher::envs {

/// Physics shared by the Hand, Hand-Wall and Robot throwing tasks. Units: unit screen, one
/// time unit per step.
struct ThrowPhysics {
  double gravity = 0.003;
  double max_hand_speed = 0.05;
  double grasp_radius = 0.05;
  double ball_radius = 0.025;  // resting ball centre height
  double success_epsilon = 0.05;
  int horizon = 50;
  goals::Box hand_workspace = goals::Box::rect(0.05, 0.35, 0.05, 0.95);
  goals::Box target_region = goals::Box::rect(0.55, 0.95, 0.05, 0.95);
  bool wall = false;
  double wall_x = 0.45;
  double wall_height = 0.5;

  void validate() const;
};

/// Moves a free ball one step: explicit Euler under gravity, wall and screen contacts.
/// Floor contact rests the ball; touching the wall kills its velocity so it drops.
void advance_free_ball(const ThrowPhysics& phys, Vec2& pos, Vec2& vel);

/// True when the segment a -> b passes through the wall (x = wall_x, 0 <= y <= wall_height).
bool crosses_wall(const ThrowPhysics& phys, const Vec2& a, const Vec2& b);

double throw_reward(const ThrowPhysics& phys, std::span<const double> achieved,
                    std::span<const double> desired);

/// Hand task (and Hand-Wall when phys.wall is set). Observation: hand pos, hand vel / max
/// speed, gripper (1 closed, 0 open), ball pos, ball vel / max speed. Action: hand velocity
/// in [-1, 1]^2 scaled by max speed, gripper open iff a[2] > 0.
class HandEnv final : public Environment {
 public:
  explicit HandEnv(ThrowPhysics phys = {});

  [[nodiscard]] std::string name() const override { return phys_.wall ? "hand-wall" : "hand"; }
  [[nodiscard]] std::size_t observation_dim() const override { return 9; }
  [[nodiscard]] std::size_t action_dim() const override { return 3; }
  [[nodiscard]] std::size_t goal_dim() const override { return 2; }
  [[nodiscard]] const Vec& action_low() const override { return low_; }
  [[nodiscard]] const Vec& action_high() const override { return high_; }
  [[nodiscard]] std::vector<bool> binary_actions() const override { return {false, false, true}; }
  [[nodiscard]] double success_epsilon() const override { return phys_.success_epsilon; }
  [[nodiscard]] int horizon() const override { return phys_.horizon; }

  using Environment::reset;
  [[nodiscard]] ResetResult reset(Rng& rng) const override;
  [[nodiscard]] StepResult step(const EnvState& state, std::span<const double> goal,
                                std::span<const double> action) const override;
  [[nodiscard]] Vec observe(const EnvState& state) const override;
  [[nodiscard]] Vec achieved_goal(const EnvState& state) const override;
  [[nodiscard]] double reward(std::span<const double> achieved,
                              std::span<const double> desired) const override {
    return throw_reward(phys_, achieved, desired);
  }
  [[nodiscard]] std::optional<goals::GoalDistributionSpec> goal_distribution() const override {
    return goals::GoalDistributionSpec{phys_.target_region};
  }
  [[nodiscard]] const ThrowPhysics& physics() const { return phys_; }

 private:
  ThrowPhysics phys_;
  Vec low_, high_;
};

struct ArmGeometry {
  double link1 = 0.25;
  double link2 = 0.25;
  Vec2 base{0.2, 0.3};
  double max_joint_speed = 0.15;

  void validate() const;
  [[nodiscard]] Vec2 forward_kinematics(const Vec2& theta) const;
  /// d(ee) / d(theta) applied to `theta_dot`.
  [[nodiscard]] Vec2 ee_velocity(const Vec2& theta, const Vec2& theta_dot) const;
};

/// Two-link planar arm carrying the ball with its end-effector. Observation (15): cos/sin of
/// both joint angles, ee pos, joint velocities / max speed, ee vel / max hand speed, gripper,
/// ball pos, ball vel / max hand speed. Action: joint velocities in [-1, 1]^2, gripper.
/// Joint motions that would leave the hand workspace are rejected.
class RobotEnv final : public Environment {
 public:
  explicit RobotEnv(ThrowPhysics phys = {}, ArmGeometry arm = {});

  [[nodiscard]] std::string name() const override { return "robot"; }
  [[nodiscard]] std::size_t observation_dim() const override { return 15; }
  [[nodiscard]] std::size_t action_dim() const override { return 3; }
  [[nodiscard]] std::size_t goal_dim() const override { return 2; }
  [[nodiscard]] const Vec& action_low() const override { return low_; }
  [[nodiscard]] const Vec& action_high() const override { return high_; }
  [[nodiscard]] std::vector<bool> binary_actions() const override { return {false, false, true}; }
  [[nodiscard]] double success_epsilon() const override { return phys_.success_epsilon; }
  [[nodiscard]] int horizon() const override { return phys_.horizon; }

  using Environment::reset;
  [[nodiscard]] ResetResult reset(Rng& rng) const override;
  [[nodiscard]] StepResult step(const EnvState& state, std::span<const double> goal,
                                std::span<const double> action) const override;
  [[nodiscard]] Vec observe(const EnvState& state) const override;
  [[nodiscard]] Vec achieved_goal(const EnvState& state) const override;
  [[nodiscard]] double reward(std::span<const double> achieved,
                              std::span<const double> desired) const override {
    return throw_reward(phys_, achieved, desired);
  }
  [[nodiscard]] std::optional<goals::GoalDistributionSpec> goal_distribution() const override {
    return goals::GoalDistributionSpec{phys_.target_region};
  }
  [[nodiscard]] const ThrowPhysics& physics() const { return phys_; }
  [[nodiscard]] const ArmGeometry& arm() const { return arm_; }

 private:
  ThrowPhysics phys_;
  ArmGeometry arm_;
  Vec low_, high_;
};

}  // namespace ibsher::envs
