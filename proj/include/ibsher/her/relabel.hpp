#pragma once

#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "ibsher/common.hpp"
#include "ibsher/envs/env.hpp"
#include "ibsher/replay/transition.hpp"

namespace ibsher::her {

class IbsState;

/// One rollout. states, observations and achieved_goals have length T + 1, actions and
/// rewards length T.
struct EpisodeTrajectory {
  std::vector<envs::EnvState> states;
  std::vector<Vec> observations;
  std::vector<Vec> actions;
  std::vector<double> rewards;
  std::vector<Vec> achieved_goals;
  Vec desired_goal;

  [[nodiscard]] std::size_t length() const { return actions.size(); }
  void validate() const;
};

enum class Variant { her, her_ibs, filtered_her, filtered_her_ibs };

std::string_view to_string(Variant v);
Variant parse_variant(std::string_view name);

struct HerConfig {
  int k_virtual = 4;
  bool filter = false;
  bool ibs = false;

  static HerConfig from_variant(Variant v, int k_virtual = 4);
  void validate() const;
};

/// Future strategy: achieved_goals[t + 1 .. T].
std::vector<Vec> candidate_goals(const EpisodeTrajectory& traj, std::size_t t);

enum class FilterDecision { keep, skip };

using RewardFn = std::function<double(std::span<const double>, std::span<const double>)>;

/// Skips a virtual goal that was already achieved where the action was taken from:
/// reward(achieved_goals[t], vg) == 0. For t >= 1 that is the reward of the predecessor step.
FilterDecision filter_virtual_transition(const EpisodeTrajectory& traj, std::size_t t,
                                         std::span<const double> vg, const RewardFn& reward);

/// k draws with replacement. `priorities` must sum to one (1e-9).
std::vector<std::size_t> sample_indices(std::span<const double> priorities, std::size_t k, Rng& rng);
std::vector<Vec> sample_virtual_goals(const std::vector<Vec>& candidates,
                                      std::span<const double> priorities, std::size_t k, Rng& rng);

struct RelabelStats {
  std::size_t real = 0;
  std::size_t virtual_kept = 0;
  std::size_t virtual_skipped = 0;
};

/// Real transitions plus k virtual ones per step. Surviving virtual goals are recorded in
/// `tracker` (when given); IBS priorities are used only when cfg.ibs is set.
std::vector<replay::Transition> relabel_episode(const EpisodeTrajectory& traj, const envs::Environment& env,
                                                const HerConfig& cfg, IbsState* tracker, Rng& rng,
                                                RelabelStats* stats = nullptr);

}  // namespace ibsher::her
