#include "ibsher/metrics/evaluation.hpp"

#include <cmath>

#include "ibsher/metrics/curves.hpp"

namespace ibsher::metrics {

namespace {

Vec join(const Vec& a, const Vec& b) {
  Vec out(a);
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

PolicyFn greedy(const ddpg::ActorCritic& ac) {
  return [&ac](std::span<const double> x) { return ddpg::greedy_action(ac, x); };
}

}  // namespace

EvalReport evaluate_policy(const envs::Environment& env, const PolicyFn& policy, int n_episodes,
                           std::uint64_t seed) {
  if (n_episodes < 1) throw PreconditionError("evaluation needs at least one episode");
  Rng rng(seed);
  EvalReport report;
  report.n_episodes = n_episodes;
  int final_successes = 0;
  double distance_sum = 0.0;
  for (int e = 0; e < n_episodes; ++e) {
    auto [state, goal] = env.reset(rng);
    bool success = false;
    double last_reward = env.reward(env.achieved_goal(state), goal);
    for (int t = 0; t < env.horizon(); ++t) {
      const Vec a = policy(join(env.observe(state), goal));
      auto step = env.step(state, goal, a);
      state = std::move(step.state);
      last_reward = step.reward;
      if (step.reward == 0.0) success = true;
      if (step.done) break;
    }
    report.successes += success ? 1 : 0;
    final_successes += last_reward == 0.0 ? 1 : 0;
    distance_sum += env.distance(env.achieved_goal(state), goal);
  }
  report.success_rate = static_cast<double>(report.successes) / n_episodes;
  report.final_success_rate = static_cast<double>(final_successes) / n_episodes;
  report.mean_final_distance = distance_sum / n_episodes;
  return report;
}

EvalReport evaluate_policy(const envs::Environment& env, const ddpg::ActorCritic& ac, int n_episodes,
                           std::uint64_t seed) {
  return evaluate_policy(env, greedy(ac), n_episodes, seed);
}

int probe_length(double gamma, int horizon, double tail) {
  if (gamma >= 1.0) return horizon;
  if (gamma <= 0.0) return 1;
  return static_cast<int>(std::ceil(std::log(tail) / std::log(gamma)));
}

BiasProbe q_bias_probe(const envs::Environment& env, const PolicyFn& policy, const QFn& q, int n_episodes,
                       double gamma, std::uint64_t seed) {
  if (n_episodes < 1) throw PreconditionError("the bias probe needs at least one episode");
  Rng rng(seed);
  const int length = probe_length(gamma, env.horizon());
  std::vector<double> q0s, returns;
  for (int e = 0; e < n_episodes; ++e) {
    auto [state, goal] = env.reset(rng);
    const Vec x0 = join(env.observe(state), goal);
    const Vec a0 = policy(x0);
    q0s.push_back(q(x0, a0));
    double ret = 0.0;
    double discount = 1.0;
    Vec a = a0;
    for (int t = 0; t < length; ++t) {
      if (t > 0) a = policy(join(env.observe(state), goal));
      auto step = env.step(state, goal, a);
      state = std::move(step.state);
      ret += discount * step.reward;
      discount *= gamma;
      if (step.reward >= 0.0) break;  // reaching the goal is terminal for the value being probed
    }
    returns.push_back(ret);
  }
  return {percentile(q0s, 50.0), percentile(returns, 50.0)};
}

BiasProbe q_bias_probe(const envs::Environment& env, const ddpg::ActorCritic& ac, int n_episodes,
                       double gamma, std::uint64_t seed) {
  ddpg::AgentConfig range;
  range.gamma = gamma;
  const double q_min = range.q_min();
  const QFn q = [&ac, q_min](std::span<const double> x, std::span<const double> a) {
    return ddpg::q_value(ac.critic, x, a, q_min);
  };
  return q_bias_probe(env, greedy(ac), q, n_episodes, gamma, seed);
}

VgReport vg_distribution_report(const std::vector<replay::DumpRow>& dump, const goals::GridSpec& grid,
                                const goals::GridDistribution& target, bool reverse) {
  std::vector<Vec> goals_;
  for (const auto& row : dump) {
    if (row.is_virtual) goals_.push_back(row.goal);
  }
  if (goals_.empty()) throw PreconditionError("buffer dump holds no virtual transitions");
  VgReport report;
  report.proposal = goals::histogram(grid, goals_);
  report.n_virtual = goals_.size();
  report.kl = reverse ? goals::kl_divergence(report.proposal, target)
                      : goals::kl_divergence(target, report.proposal);
  return report;
}

std::size_t count_misleading(const std::vector<replay::DumpRow>& dump, const envs::Environment& env) {
  std::size_t n = 0;
  for (const auto& row : dump) {
    if (row.is_virtual && env.reward(row.achieved_goal, row.goal) == 0.0) ++n;
  }
  return n;
}

}  // namespace ibsher::metrics
