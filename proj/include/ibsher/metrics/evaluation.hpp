#pragma once

#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "ibsher/ddpg/agent.hpp"
#include "ibsher/envs/env.hpp"
#include "ibsher/goals/grid.hpp"
#include "ibsher/replay/transition.hpp"

namespace ibsher::metrics {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct EvalReport {
  double success_rate = 0.0;        // any step with reward 0
  double final_success_rate = 0.0;  // reward 0 at the last step
  double mean_final_distance = 0.0;
  double q0_estimate = kNaN;
  double empirical_return = kNaN;
  double kl_to_target = kNaN;
  int n_episodes = 0;
  int successes = 0;
};

using PolicyFn = std::function<Vec(std::span<const double> obs_goal)>;
using QFn = std::function<double(std::span<const double> obs_goal, std::span<const double> action)>;

/// Runs `n_episodes` greedy episodes; resets are drawn from Rng(seed).
EvalReport evaluate_policy(const envs::Environment& env, const PolicyFn& policy, int n_episodes,
                           std::uint64_t seed);
EvalReport evaluate_policy(const envs::Environment& env, const ddpg::ActorCritic& ac, int n_episodes,
                           std::uint64_t seed);

struct BiasProbe {
  double q0_estimate = 0.0;
  double empirical_return = 0.0;
  [[nodiscard]] double bias() const { return q0_estimate - empirical_return; }
};

/// Number of steps after which gamma^L drops below `tail` (the horizon when gamma = 1).
int probe_length(double gamma, int horizon, double tail = 1e-3);

/// Medians over episodes of Q(s0||g, pi(s0||g)) and of the discounted return of the greedy
/// rollout from the same (s0, g). The rollout ignores the time limit and runs for up to
/// probe_length(gamma) steps, matching a critic that bootstraps through timeouts; the first
/// success ends it, as a terminal state would.
BiasProbe q_bias_probe(const envs::Environment& env, const PolicyFn& policy, const QFn& q, int n_episodes,
                       double gamma, std::uint64_t seed);
BiasProbe q_bias_probe(const envs::Environment& env, const ddpg::ActorCritic& ac, int n_episodes,
                       double gamma, std::uint64_t seed);

struct VgReport {
  goals::GridDistribution proposal;
  double kl = 0.0;
  std::size_t n_virtual = 0;
};

/// Histogram of the virtual goals in a buffer dump and KL(target || proposal)
/// (KL(proposal || target) when `reverse`). Throws PreconditionError without virtual rows.
VgReport vg_distribution_report(const std::vector<replay::DumpRow>& dump, const goals::GridSpec& grid,
                                const goals::GridDistribution& target, bool reverse = false);

/// Virtual transitions whose goal was already achieved where the action was taken.
std::size_t count_misleading(const std::vector<replay::DumpRow>& dump, const envs::Environment& env);

}  // namespace ibsher::metrics
