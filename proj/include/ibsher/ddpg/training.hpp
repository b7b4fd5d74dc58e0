#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ibsher/ddpg/agent.hpp"
#include "ibsher/envs/env.hpp"
#include "ibsher/her/ibs.hpp"
#include "ibsher/her/relabel.hpp"
#include "ibsher/metrics/curves.hpp"
#include "ibsher/metrics/evaluation.hpp"
#include "ibsher/replay/per_buffer.hpp"

namespace ibsher::ddpg {

struct Schedule {
  int epochs = 50;
  int cycles = 50;
  int episodes_per_cycle = 16;
  int optimization_steps = 40;
  int eval_episodes = 50;
  int probe_episodes = 50;

  void validate() const;
};

struct TrainingSetup {
  AgentConfig agent;
  her::HerConfig her;  // filter/ibs flags are overridden by the variant
  her::IbsConfig ibs;
  replay::PerConfig per;
  Schedule schedule;
  double reference_sigma = 0.2;   // kernel width of the fixed grid KL is measured against
  double reference_floor = 0.002;
  bool kl_reverse = false;
  std::uint64_t seed = 0;
};

struct RunArtifacts {
  std::vector<metrics::CurveRow> curves;
  std::vector<double> final_success;  // secondary per-epoch column
  ActorCritic ac;
  replay::PerBuffer buffer;
  std::optional<her::IbsState> tracker;
  std::optional<goals::GridDistribution> reference_target;
  her::RelabelStats relabel;
  std::uint64_t optimization_steps = 0;
};

using EpochCallback = std::function<void(const metrics::CurveRow&)>;

/// One exploratory episode under epsilon.
her::EpisodeTrajectory rollout(const envs::Environment& env, const ActorCritic& ac, double epsilon,
                               const AgentConfig& cfg, Rng& env_rng, Rng& explore_rng);

/// epochs x cycles x (episodes, then optimization steps). Epsilon is set at the start of each
/// epoch; targets sync on the cycle clock; the policy is evaluated after each epoch.
RunArtifacts run_training(const envs::Environment& env, her::Variant variant, const TrainingSetup& setup,
                          const EpochCallback& on_epoch = {});

/// Buffer contents oldest first, in the diagnostic dump format.
void write_buffer_dump(std::ostream& out, const replay::PerBuffer& buffer);

}  // namespace ibsher::ddpg
