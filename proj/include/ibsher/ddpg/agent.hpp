#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ibsher/common.hpp"
#include "ibsher/nn/mlp.hpp"
#include "ibsher/nn/optimizer.hpp"
#include "ibsher/replay/per_buffer.hpp"

namespace ibsher::ddpg {

/// Which critic layers standardize their inputs with running statistics.
enum class CriticNorm { none, input, all };

std::string_view to_string(CriticNorm n);
CriticNorm parse_critic_norm(std::string_view name);

struct AgentConfig {
  double gamma = 0.98;
  std::size_t buffer_capacity = 1000000;
  double epsilon_init = 1.0;
  double epsilon_decay = 0.95;
  double epsilon_final = 0.05;
  double noise_scale_fraction = 0.05;
  double random_action_fraction = 0.2;  // share of exploratory steps that are uniform
  int batch_size = 64;
  int target_sync_period = 7;
  nn::TargetSync::Mode target_sync = nn::TargetSync::Mode::hard;
  double polyak_tau = 0.05;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  double actor_lr = 1e-3;
  double critic_lr = 1e-3;
  double clip_norm = 3.0;
  double action_l2 = 0.0;
  std::vector<int> actor_hidden{64, 64, 64};
  std::vector<int> critic_hidden{64, 64, 64};
  CriticNorm critic_norm = CriticNorm::input;
  double norm_momentum = 0.01;

  void validate() const;
  /// max(epsilon_final, epsilon_init * epsilon_decay^epoch).
  [[nodiscard]] double epsilon_at(int epoch) const;
  [[nodiscard]] double q_min() const { return gamma < 1.0 ? -1.0 / (1.0 - gamma) : -1e300; }
};

struct ActionSpace {
  Vec low;
  Vec high;
  std::vector<bool> binary;

  [[nodiscard]] std::size_t dim() const { return low.size(); }
  void validate() const;
  /// Maps tanh outputs in [-1, 1] onto the bounds.
  [[nodiscard]] double scale(std::size_t i) const { return 0.5 * (high[i] - low[i]); }
  [[nodiscard]] double offset(std::size_t i) const { return 0.5 * (high[i] + low[i]); }
};

/// Actor pi(s||g) and critic Q(s||g||a) plus their targets and optimizer state.
struct ActorCritic {
  nn::Mlp actor;
  nn::Mlp critic;
  nn::Mlp actor_target;
  nn::Mlp critic_target;
  nn::OptimizerState actor_opt;
  nn::OptimizerState critic_opt;
  ActionSpace actions;

  [[nodiscard]] int input_dim() const { return actor.input_dim(); }
  void validate() const;
};

ActorCritic make_actor_critic(int obs_goal_dim, const ActionSpace& actions, const AgentConfig& cfg,
                              std::uint64_t seed);

/// Deterministic policy output, rows of obs||goal -> rows of bounded actions.
nn::Matrix policy(const nn::Mlp& actor, const ActionSpace& actions, const nn::Matrix& obs_goal);
Vec greedy_action(const ActorCritic& ac, std::span<const double> obs_goal);

/// Critic outputs read as values: clamped to [q_min, 0], the range of any discounted return.
nn::Matrix critic_values(const nn::Matrix& raw, double q_min);

/// Critic value for one obs||goal and action.
double q_value(const nn::Mlp& critic, std::span<const double> obs_goal, std::span<const double> action,
               double q_min);

enum class ExplorationBranch { greedy, noisy, random };

/// Decaying epsilon-greedy: greedy with probability 1 - eps, actor output plus Gaussian noise
/// (std noise_scale_fraction * range) with probability (1 - random_fraction) * eps, uniform
/// otherwise. Exploratory actions are clamped and binary coordinates thresholded at the midpoint.
Vec select_action(const ActorCritic& ac, std::span<const double> obs_goal, double epsilon,
                  const AgentConfig& cfg, Rng& rng, ExplorationBranch* branch = nullptr);

/// y = r + gamma * Q'(s'||g, pi'(s'||g)), clamped to [-1 / (1 - gamma), 0].
Eigen::VectorXd critic_targets(const replay::Batch& batch, const ActorCritic& ac, const AgentConfig& cfg);

struct TrainStats {
  double critic_loss = 0.0;
  double actor_loss = 0.0;
  Eigen::VectorXd td_errors;  // |Q - y| per sample
};

/// One critic step on the importance-weighted squared TD error, then one actor step on
/// -mean Q(s, pi(s)) with the gradient routed through the critic's action inputs.
TrainStats train_step(ActorCritic& ac, const replay::Batch& batch, const AgentConfig& cfg);

/// Gradient of the actor loss w.r.t. actor parameters (no update). Exposed for checks.
nn::Gradients actor_gradients(const ActorCritic& ac, const nn::Matrix& obs_goal, const AgentConfig& cfg,
                              double* loss = nullptr);

void sync_targets(ActorCritic& ac, const AgentConfig& cfg);

}  // namespace ibsher::ddpg
