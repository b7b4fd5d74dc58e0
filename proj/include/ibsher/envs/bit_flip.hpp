#pragma once

#include "ibsher/envs/env.hpp"

namespace ibsher::envs {

struct BitFlipConfig {
  int n_bits = 8;
  int horizon = 0;  // 0 means n_bits + 2

  void validate() const;
};

/// Bit-flip with an extra null action. Actions are n + 1 continuous scores decoded by argmax:
/// index i < n flips bit i, index n leaves the bits alone and ends the episode. A terminated
/// state absorbs every later action.
class BitFlipEnv final : public Environment {
 public:
  explicit BitFlipEnv(BitFlipConfig cfg = {});

  [[nodiscard]] std::string name() const override { return "bit-flip"; }
  [[nodiscard]] std::size_t observation_dim() const override { return n_; }
  [[nodiscard]] std::size_t action_dim() const override { return n_ + 1; }
  [[nodiscard]] std::size_t goal_dim() const override { return n_; }
  [[nodiscard]] const Vec& action_low() const override { return low_; }
  [[nodiscard]] const Vec& action_high() const override { return high_; }
  [[nodiscard]] std::vector<bool> binary_actions() const override { return std::vector<bool>(n_ + 1, false); }
  [[nodiscard]] double success_epsilon() const override { return 0.5; }
  [[nodiscard]] int horizon() const override { return horizon_; }

  using Environment::reset;
  [[nodiscard]] ResetResult reset(Rng& rng) const override;
  [[nodiscard]] StepResult step(const EnvState& state, std::span<const double> goal,
                                std::span<const double> action) const override;
  [[nodiscard]] Vec observe(const EnvState& state) const override;
  [[nodiscard]] Vec achieved_goal(const EnvState& state) const override;
  [[nodiscard]] double reward(std::span<const double> achieved,
                              std::span<const double> desired) const override;
  [[nodiscard]] std::optional<goals::GoalDistributionSpec> goal_distribution() const override {
    return std::nullopt;
  }

  /// Index chosen by argmax (ties resolve to the lowest index).
  [[nodiscard]] std::size_t decode(std::span<const double> action) const;
  [[nodiscard]] std::size_t null_action() const { return n_; }
  /// Continuous action whose argmax is `index`.
  [[nodiscard]] Vec encode(std::size_t index) const;

 private:
  std::size_t n_;
  int horizon_;
  Vec low_, high_;
};

}  // namespace ibsher::envs
