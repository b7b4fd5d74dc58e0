#include "ibsher/her/relabel.hpp"

#include <cmath>
#include <string>

#include "ibsher/her/ibs.hpp"

namespace ibsher::her {

void EpisodeTrajectory::validate() const {
  const std::size_t t = actions.size();
  if (states.size() != t + 1 || observations.size() != t + 1 || achieved_goals.size() != t + 1 ||
      rewards.size() != t) {
    throw ShapeError("trajectory arrays have inconsistent lengths");
  }
}

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::her: return "her";
    case Variant::her_ibs: return "her-ibs";
    case Variant::filtered_her: return "filtered-her";
    case Variant::filtered_her_ibs: return "filtered-her-ibs";
  }
  return "her";
}

Variant parse_variant(std::string_view name) {
  if (name == "her") return Variant::her;
  if (name == "her-ibs") return Variant::her_ibs;
  if (name == "filtered-her") return Variant::filtered_her;
  if (name == "filtered-her-ibs") return Variant::filtered_her_ibs;
  throw ConfigError("unknown algorithm variant '" + std::string(name) +
                    "' (expected her, her-ibs, filtered-her or filtered-her-ibs)");
}

HerConfig HerConfig::from_variant(Variant v, int k_virtual) {
  HerConfig c;
  c.k_virtual = k_virtual;
  c.filter = v == Variant::filtered_her || v == Variant::filtered_her_ibs;
  c.ibs = v == Variant::her_ibs || v == Variant::filtered_her_ibs;
  return c;
}

void HerConfig::validate() const {
  if (k_virtual < 0) throw ConfigError("k_virtual must be >= 0");
}

std::vector<Vec> candidate_goals(const EpisodeTrajectory& traj, std::size_t t) {
  if (t >= traj.length()) throw PreconditionError("candidate index out of range");
  return {traj.achieved_goals.begin() + static_cast<long>(t + 1), traj.achieved_goals.end()};
}

FilterDecision filter_virtual_transition(const EpisodeTrajectory& traj, std::size_t t,
                                         std::span<const double> vg, const RewardFn& reward) {
  if (t >= traj.length()) throw PreconditionError("filter index out of range");
  return reward(traj.achieved_goals[t], vg) == 0.0 ? FilterDecision::skip : FilterDecision::keep;
}

std::vector<std::size_t> sample_indices(std::span<const double> priorities, std::size_t k, Rng& rng) {
  if (priorities.empty()) throw PreconditionError("cannot sample from an empty candidate set");
  double total = 0.0;
  for (double p : priorities) {
    if (!(p >= 0.0)) throw PreconditionError("priorities must be nonnegative");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) throw PreconditionError("priorities must sum to 1");
  std::discrete_distribution<std::size_t> pick(priorities.begin(), priorities.end());
  std::vector<std::size_t> out(k);
  for (auto& i : out) i = pick(rng);
  return out;
}

std::vector<Vec> sample_virtual_goals(const std::vector<Vec>& candidates,
                                      std::span<const double> priorities, std::size_t k, Rng& rng) {
  if (candidates.size() != priorities.size()) throw ShapeError("one priority is needed per candidate");
  std::vector<Vec> out;
  out.reserve(k);
  for (std::size_t i : sample_indices(priorities, k, rng)) out.push_back(candidates[i]);
  return out;
}

std::vector<replay::Transition> relabel_episode(const EpisodeTrajectory& traj, const envs::Environment& env,
                                                const HerConfig& cfg, IbsState* tracker, Rng& rng,
                                                RelabelStats* stats) {
  traj.validate();
  cfg.validate();
  if (cfg.ibs && tracker == nullptr) throw ConfigError("IBS prioritization needs a goal-space tracker");
  const RewardFn reward = [&env](std::span<const double> a, std::span<const double> b) {
    return env.reward(a, b);
  };
  RelabelStats local;
  std::vector<replay::Transition> out;
  out.reserve(traj.length() * (1 + static_cast<std::size_t>(cfg.k_virtual)));
  for (std::size_t t = 0; t < traj.length(); ++t) {
    replay::Transition real;
    real.observation = traj.observations[t];
    real.goal = traj.desired_goal;
    real.action = traj.actions[t];
    real.reward = traj.rewards[t];
    real.next_observation = traj.observations[t + 1];
    real.achieved_goal = traj.achieved_goals[t];
    real.next_achieved_goal = traj.achieved_goals[t + 1];
    real.is_virtual = false;
    out.push_back(real);
    ++local.real;
    if (cfg.k_virtual == 0) continue;

    const auto candidates = candidate_goals(traj, t);
    Vec priorities;
    if (cfg.ibs) {
      priorities = tracker->priorities(candidates);
    } else {
      priorities.assign(candidates.size(), 1.0 / static_cast<double>(candidates.size()));
    }
    for (const Vec& vg : sample_virtual_goals(candidates, priorities, static_cast<std::size_t>(cfg.k_virtual), rng)) {
      if (cfg.filter && filter_virtual_transition(traj, t, vg, reward) == FilterDecision::skip) {
        ++local.virtual_skipped;
        continue;
      }
      replay::Transition v = real;
      v.goal = vg;
      v.reward = env.reward(traj.achieved_goals[t + 1], vg);
      v.is_virtual = true;
      out.push_back(std::move(v));
      ++local.virtual_kept;
      if (tracker != nullptr) tracker->record_stored_goal(vg);
    }
  }
  if (stats != nullptr) {
    stats->real += local.real;
    stats->virtual_kept += local.virtual_kept;
    stats->virtual_skipped += local.virtual_skipped;
  }
  return out;
}

}  // namespace ibsher::her
