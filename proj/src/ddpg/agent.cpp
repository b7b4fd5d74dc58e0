#include "ibsher/ddpg/agent.hpp"

#include <algorithm>
#include <cmath>

namespace ibsher::ddpg {

std::string_view to_string(CriticNorm n) {
  switch (n) {
    case CriticNorm::none: return "none";
    case CriticNorm::input: return "input";
    case CriticNorm::all: return "all";
  }
  return "none";
}

CriticNorm parse_critic_norm(std::string_view name) {
  if (name == "none") return CriticNorm::none;
  if (name == "input") return CriticNorm::input;
  if (name == "all") return CriticNorm::all;
  throw ConfigError("unknown critic normalization '" + std::string(name) + "'");
}

void AgentConfig::validate() const {
  if (!(gamma >= 0.0 && gamma <= 1.0)) throw ConfigError("agent.gamma must lie in [0, 1]");
  if (!(epsilon_final > 0.0 && epsilon_final <= epsilon_init && epsilon_init <= 1.0)) {
    throw ConfigError("agent epsilons must satisfy 0 < epsilon_final <= epsilon_init <= 1");
  }
  if (!(epsilon_decay > 0.0 && epsilon_decay <= 1.0)) throw ConfigError("agent.epsilon_decay must lie in (0, 1]");
  if (!(noise_scale_fraction >= 0.0)) throw ConfigError("agent.noise_scale_fraction must be >= 0");
  if (!(random_action_fraction >= 0.0 && random_action_fraction <= 1.0)) {
    throw ConfigError("agent.random_action_fraction must lie in [0, 1]");
  }
  if (batch_size < 1) throw ConfigError("agent.batch_size must be >= 1");
  if (buffer_capacity < static_cast<std::size_t>(batch_size)) {
    throw ConfigError("agent.buffer_capacity must be at least the batch size");
  }
  if (target_sync_period < 1) throw ConfigError("agent.target_sync_period must be >= 1");
  if (!(polyak_tau >= 0.0 && polyak_tau <= 1.0)) throw ConfigError("agent.polyak_tau must lie in [0, 1]");
  if (!(actor_lr > 0.0 && critic_lr > 0.0)) throw ConfigError("learning rates must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("agent.clip_norm must be positive");
  if (!(action_l2 >= 0.0)) throw ConfigError("agent.action_l2 must be >= 0");
  for (int h : actor_hidden)
    if (h < 1) throw ConfigError("actor hidden sizes must be positive");
  for (int h : critic_hidden)
    if (h < 1) throw ConfigError("critic hidden sizes must be positive");
  if (!(norm_momentum > 0.0 && norm_momentum <= 1.0)) throw ConfigError("agent.norm_momentum must lie in (0, 1]");
}

double AgentConfig::epsilon_at(int epoch) const {
  return std::max(epsilon_final, epsilon_init * std::pow(epsilon_decay, epoch));
}

void ActionSpace::validate() const {
  if (low.empty() || low.size() != high.size() || binary.size() != low.size()) {
    throw ConfigError("action space bounds are inconsistent");
  }
  for (std::size_t i = 0; i < low.size(); ++i) {
    if (!(high[i] > low[i])) throw ConfigError("action bounds must have positive range");
  }
}

void ActorCritic::validate() const {
  if (actor.output_dim() != static_cast<int>(actions.dim())) {
    throw ShapeError("actor output does not match the action dimension");
  }
  if (critic.output_dim() != 1) throw ShapeError("critic must have a single output");
  if (critic.input_dim() != actor.input_dim() + static_cast<int>(actions.dim())) {
    throw ShapeError("critic input must be obs||goal||action");
  }
}

ActorCritic make_actor_critic(int obs_goal_dim, const ActionSpace& actions, const AgentConfig& cfg,
                              std::uint64_t seed) {
  cfg.validate();
  actions.validate();
  const int adim = static_cast<int>(actions.dim());

  std::vector<int> actor_sizes{obs_goal_dim};
  actor_sizes.insert(actor_sizes.end(), cfg.actor_hidden.begin(), cfg.actor_hidden.end());
  actor_sizes.push_back(adim);
  std::vector<nn::Activation> actor_acts(cfg.actor_hidden.size(), nn::Activation::relu);
  actor_acts.push_back(nn::Activation::tanh);

  std::vector<int> critic_sizes{obs_goal_dim + adim};
  critic_sizes.insert(critic_sizes.end(), cfg.critic_hidden.begin(), cfg.critic_hidden.end());
  critic_sizes.push_back(1);
  std::vector<nn::Activation> critic_acts(cfg.critic_hidden.size(), nn::Activation::relu);
  critic_acts.push_back(nn::Activation::linear);
  std::vector<bool> norm(critic_acts.size(), cfg.critic_norm == CriticNorm::all);
  if (cfg.critic_norm == CriticNorm::input) norm.front() = true;

  ActorCritic ac;
  ac.actions = actions;
  ac.actor = nn::mlp_init(actor_sizes, actor_acts, mix_seed(seed, 1));
  ac.critic = nn::mlp_init(critic_sizes, critic_acts, mix_seed(seed, 2), norm);
  ac.actor_target = ac.actor;
  ac.critic_target = ac.critic;
  ac.actor_opt = nn::make_optimizer(ac.actor, cfg.optimizer, cfg.actor_lr, cfg.clip_norm);
  ac.critic_opt = nn::make_optimizer(ac.critic, cfg.optimizer, cfg.critic_lr, cfg.clip_norm);
  return ac;
}

namespace {

nn::Matrix scale_actions(const ActionSpace& actions, const nn::Matrix& y) {
  nn::Matrix a(y.rows(), y.cols());
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    const auto i = static_cast<std::size_t>(c);
    a.col(c) = (y.col(c).array() * actions.scale(i) + actions.offset(i)).matrix();
  }
  return a;
}

nn::Matrix concat(const nn::Matrix& a, const nn::Matrix& b) {
  nn::Matrix out(a.rows(), a.cols() + b.cols());
  out << a, b;
  return out;
}

nn::Matrix row_matrix(std::span<const double> v) {
  nn::Matrix m(1, static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<Eigen::Index>(i)) = v[i];
  return m;
}

}  // namespace

nn::Matrix policy(const nn::Mlp& actor, const ActionSpace& actions, const nn::Matrix& obs_goal) {
  return scale_actions(actions, nn::predict(actor, obs_goal));
}

Vec greedy_action(const ActorCritic& ac, std::span<const double> obs_goal) {
  const nn::Matrix a = policy(ac.actor, ac.actions, row_matrix(obs_goal));
  return Vec(a.data(), a.data() + a.size());
}

nn::Matrix critic_values(const nn::Matrix& raw, double q_min) {
  return raw.cwiseMax(q_min).cwiseMin(0.0);
}

double q_value(const nn::Mlp& critic, std::span<const double> obs_goal, std::span<const double> action,
               double q_min) {
  nn::Matrix z(1, static_cast<Eigen::Index>(obs_goal.size() + action.size()));
  for (std::size_t i = 0; i < obs_goal.size(); ++i) z(0, static_cast<Eigen::Index>(i)) = obs_goal[i];
  for (std::size_t i = 0; i < action.size(); ++i) {
    z(0, static_cast<Eigen::Index>(obs_goal.size() + i)) = action[i];
  }
  return critic_values(nn::predict(critic, z), q_min)(0, 0);
}

Vec select_action(const ActorCritic& ac, std::span<const double> obs_goal, double epsilon,
                  const AgentConfig& cfg, Rng& rng, ExplorationBranch* branch) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw PreconditionError("epsilon must lie in [0, 1]");
  if (obs_goal.size() != static_cast<std::size_t>(ac.input_dim())) {
    throw ShapeError("obs||goal does not match the actor input");
  }
  const auto& space = ac.actions;
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const double u = u01(rng);
  Vec a = greedy_action(ac, obs_goal);
  ExplorationBranch chosen = ExplorationBranch::greedy;
  if (u >= 1.0 - epsilon) {
    if (u < 1.0 - epsilon * cfg.random_action_fraction) {
      chosen = ExplorationBranch::noisy;
      for (std::size_t i = 0; i < a.size(); ++i) {
        std::normal_distribution<double> noise(0.0, cfg.noise_scale_fraction * (space.high[i] - space.low[i]));
        a[i] += noise(rng);
      }
    } else {
      chosen = ExplorationBranch::random;
      for (std::size_t i = 0; i < a.size(); ++i) a[i] = space.low[i] + u01(rng) * (space.high[i] - space.low[i]);
    }
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (space.binary[i]) a[i] = a[i] > space.offset(i) ? space.high[i] : space.low[i];
    }
  }
  for (std::size_t i = 0; i < a.size(); ++i) a[i] = std::clamp(a[i], space.low[i], space.high[i]);
  if (branch != nullptr) *branch = chosen;
  return a;
}

Eigen::VectorXd critic_targets(const replay::Batch& batch, const ActorCritic& ac, const AgentConfig& cfg) {
  if (batch.reward.size() == 0) throw PreconditionError("critic targets need a non-empty batch");
  const nn::Matrix next_a = policy(ac.actor_target, ac.actions, batch.next_obs_goal);
  const nn::Matrix next_q =
      critic_values(nn::predict(ac.critic_target, concat(batch.next_obs_goal, next_a)), cfg.q_min());
  Eigen::VectorXd y = batch.reward + cfg.gamma * next_q.col(0);
  const double lo = cfg.q_min();
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = std::clamp(y(i), lo, 0.0);
  return y;
}

nn::Gradients actor_gradients(const ActorCritic& ac, const nn::Matrix& obs_goal, const AgentConfig& cfg,
                              double* loss) {
  const auto rows = static_cast<double>(obs_goal.rows());
  const nn::ForwardResult fa = nn::forward(ac.actor, obs_goal);
  const nn::Matrix actions = scale_actions(ac.actions, fa.outputs);
  const nn::ForwardResult fc = nn::forward(ac.critic, concat(obs_goal, actions));
  if (loss != nullptr) {
    *loss = -critic_values(fc.outputs, cfg.q_min()).mean() +
            cfg.action_l2 * fa.outputs.array().square().rowwise().sum().mean();
  }
  // Exact gradient of the clamped value: nothing flows where the clamp is active.
  const double lo = cfg.q_min();
  const nn::Matrix dq = fc.outputs.unaryExpr([&](double q) { return q > lo && q < 0.0 ? -1.0 / rows : 0.0; });
  const nn::BackwardResult bc = nn::backward(ac.critic, fc.cache, dq);
  const auto adim = static_cast<Eigen::Index>(ac.actions.dim());
  nn::Matrix dy = bc.grad_input.rightCols(adim);
  for (Eigen::Index c = 0; c < adim; ++c) dy.col(c) *= ac.actions.scale(static_cast<std::size_t>(c));
  if (cfg.action_l2 > 0.0) dy += (2.0 * cfg.action_l2 / rows) * fa.outputs;
  return nn::backward(ac.actor, fa.cache, dy).params;
}

TrainStats train_step(ActorCritic& ac, const replay::Batch& batch, const AgentConfig& cfg) {
  const Eigen::Index b = batch.obs_goal.rows();
  if (b != cfg.batch_size) throw PreconditionError("batch size does not match agent.batch_size");
  const nn::Matrix z = concat(batch.obs_goal, batch.action);
  if (cfg.critic_norm != CriticNorm::none) nn::update_normalization(ac.critic, z, cfg.norm_momentum);

  const Eigen::VectorXd y = critic_targets(batch, ac, cfg);
  const nn::ForwardResult fc = nn::forward(ac.critic, z);
  const Eigen::VectorXd td = critic_values(fc.outputs, cfg.q_min()).col(0) - y;
  const Eigen::VectorXd w = batch.weights.size() == b ? batch.weights : Eigen::VectorXd::Ones(b);

  TrainStats stats;
  stats.critic_loss = (w.array() * td.array().square()).mean();
  if (!std::isfinite(stats.critic_loss)) throw NumericError("critic loss is not finite");
  // Straight through the clamp, so an out-of-range critic is still pulled back towards y.
  const nn::Matrix dq = (2.0 / static_cast<double>(b)) * (w.array() * td.array()).matrix();
  nn::Gradients gc = nn::clip_gradients(nn::backward(ac.critic, fc.cache, dq).params, cfg.clip_norm);
  nn::apply_gradients(ac.critic, gc, ac.critic_opt);

  nn::Gradients ga = nn::clip_gradients(actor_gradients(ac, batch.obs_goal, cfg, &stats.actor_loss),
                                        cfg.clip_norm);
  if (!std::isfinite(stats.actor_loss)) throw NumericError("actor loss is not finite");
  nn::apply_gradients(ac.actor, ga, ac.actor_opt);

  stats.td_errors = td.cwiseAbs();
  return stats;
}

void sync_targets(ActorCritic& ac, const AgentConfig& cfg) {
  const nn::TargetSync mode = cfg.target_sync == nn::TargetSync::Mode::hard
                                  ? nn::TargetSync::hard()
                                  : nn::TargetSync::polyak(cfg.polyak_tau);
  nn::sync_target(ac.actor_target, ac.actor, mode);
  nn::sync_target(ac.critic_target, ac.critic, mode);
}

}  // namespace ibsher::ddpg
