#include "ibsher/ddpg/training.hpp"

#include <ostream>

namespace ibsher::ddpg {

namespace {

// Independent random streams derived from the run seed.
enum Stream : std::uint64_t { kNets = 0, kEnv = 10, kExplore = 11, kHer = 12, kSample = 13, kEval = 20, kProbe = 21 };

Vec join(const Vec& a, const Vec& b) {
  Vec out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

}  // namespace

void Schedule::validate() const {
  if (epochs < 0 || cycles < 1 || episodes_per_cycle < 1 || optimization_steps < 0) {
    throw ConfigError("run schedule needs epochs >= 0, cycles >= 1, episodes >= 1, opt steps >= 0");
  }
  if (eval_episodes < 1) throw ConfigError("run.eval_episodes must be >= 1");
  if (probe_episodes < 1) throw ConfigError("run.probe_episodes must be >= 1");
}

her::EpisodeTrajectory rollout(const envs::Environment& env, const ActorCritic& ac, double epsilon,
                               const AgentConfig& cfg, Rng& env_rng, Rng& explore_rng) {
  auto [state, goal] = env.reset(env_rng);
  her::EpisodeTrajectory traj;
  traj.desired_goal = goal;
  traj.states.push_back(state);
  traj.observations.push_back(env.observe(state));
  traj.achieved_goals.push_back(env.achieved_goal(state));
  for (int t = 0; t < env.horizon(); ++t) {
    const Vec a = select_action(ac, join(traj.observations.back(), goal), epsilon, cfg, explore_rng);
    auto step = env.step(state, goal, a);
    state = std::move(step.state);
    traj.actions.push_back(a);
    traj.rewards.push_back(step.reward);
    traj.states.push_back(state);
    traj.observations.push_back(env.observe(state));
    traj.achieved_goals.push_back(env.achieved_goal(state));
    if (step.done) break;
  }
  return traj;
}

RunArtifacts run_training(const envs::Environment& env, her::Variant variant, const TrainingSetup& setup,
                          const EpochCallback& on_epoch) {
  const auto& agent = setup.agent;
  const auto& sched = setup.schedule;
  agent.validate();
  sched.validate();
  setup.per.validate();
  const her::HerConfig her_cfg = her::HerConfig::from_variant(variant, setup.her.k_virtual);
  her_cfg.validate();

  const auto spec = env.goal_distribution();
  if (her_cfg.ibs && (!spec || spec->dim() != 2)) {
    throw ConfigError("IBS variants need an environment with a continuous 2D goal space");
  }

  const ActionSpace space{env.action_low(), env.action_high(), env.binary_actions()};
  const int in_dim = static_cast<int>(env.observation_dim() + env.goal_dim());
  RunArtifacts run{
      {}, {}, make_actor_critic(in_dim, space, agent, mix_seed(setup.seed, kNets)),
      replay::PerBuffer(agent.buffer_capacity, {env.observation_dim(), env.goal_dim(), env.action_dim()}, setup.per),
      std::nullopt, std::nullopt, {}, 0};
  if (spec && spec->dim() == 2) {
    run.tracker.emplace(setup.ibs, *spec);
    run.reference_target =
        goals::build_target_grid(*spec, setup.reference_sigma, setup.ibs.grid, setup.reference_floor);
  }

  Rng env_rng(mix_seed(setup.seed, kEnv));
  Rng explore_rng(mix_seed(setup.seed, kExplore));
  Rng her_rng(mix_seed(setup.seed, kHer));
  Rng sample_rng(mix_seed(setup.seed, kSample));
  const std::uint64_t total_steps =
      static_cast<std::uint64_t>(sched.epochs) * sched.cycles * static_cast<std::uint64_t>(sched.optimization_steps);
  std::int64_t completed_cycles = 0;
  her::IbsState* tracker = run.tracker ? &*run.tracker : nullptr;

  for (int epoch = 0; epoch < sched.epochs; ++epoch) {
    const double epsilon = agent.epsilon_at(epoch);
    for (int cycle = 0; cycle < sched.cycles; ++cycle) {
      for (int e = 0; e < sched.episodes_per_cycle; ++e) {
        const auto traj = rollout(env, run.ac, epsilon, agent, env_rng, explore_rng);
        for (const auto& t : her::relabel_episode(traj, env, her_cfg, tracker, her_rng, &run.relabel)) {
          run.buffer.store(t);
        }
      }
      for (int s = 0; s < sched.optimization_steps; ++s) {
        if (run.buffer.size() >= static_cast<std::size_t>(agent.batch_size)) {
          const double beta = setup.per.beta_at(run.optimization_steps, total_steps);
          const auto batch = run.buffer.sample(static_cast<std::size_t>(agent.batch_size), beta, sample_rng);
          const auto stats = train_step(run.ac, batch, agent);
          run.buffer.update_priorities(batch.indices, {stats.td_errors.data(), static_cast<std::size_t>(stats.td_errors.size())});
        }
        ++run.optimization_steps;
      }
      ++completed_cycles;
      if (agent.target_sync == nn::TargetSync::Mode::polyak || completed_cycles % agent.target_sync_period == 0) {
        sync_targets(run.ac, agent);
      }
      if (tracker != nullptr) tracker->anneal_sigma(completed_cycles);
    }

    const auto eval = metrics::evaluate_policy(env, run.ac, sched.eval_episodes, mix_seed(setup.seed, kEval));
    const auto probe =
        metrics::q_bias_probe(env, run.ac, sched.probe_episodes, agent.gamma, mix_seed(setup.seed, kProbe));
    metrics::CurveRow row;
    row.epoch = epoch;
    row.success_rate = eval.success_rate;
    row.mean_final_distance = eval.mean_final_distance;
    row.q0_estimate = probe.q0_estimate;
    row.empirical_return = probe.empirical_return;
    row.epsilon = epsilon;
    if (tracker != nullptr) {
      const auto proposal = tracker->proposal_distribution();
      row.kl_to_target = setup.kl_reverse ? goals::kl_divergence(proposal, *run.reference_target)
                                          : goals::kl_divergence(*run.reference_target, proposal);
      row.sigma_sq = tracker->sigma_sq();
    } else {
      row.kl_to_target = metrics::kNaN;
      row.sigma_sq = metrics::kNaN;
    }
    run.curves.push_back(row);
    run.final_success.push_back(eval.final_success_rate);
    if (on_epoch) on_epoch(row);
  }
  return run;
}

void write_buffer_dump(std::ostream& out, const replay::PerBuffer& buffer) {
  replay::write_dump_header(out, buffer.schema().goal_dim);
  for (std::size_t slot : buffer.slots_oldest_first()) replay::write_dump_row(out, buffer.dump_row(slot));
  if (!out) throw IoError("failed writing buffer dump");
}

}  // namespace ibsher::ddpg
