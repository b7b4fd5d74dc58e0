#include "ibsher/cli/run_config.hpp"

#include <fstream>
#include <set>

namespace ibsher::cli {

using nlohmann::json;

namespace {

// Walks one JSON object, remembering which keys were consumed so leftovers can be rejected.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(path_ + " must be an object");
  }

  [[nodiscard]] std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    const auto it = j_.find(key);
    if (it == j_.end()) return nullptr;
    seen_.insert(key);
    return &*it;
  }

  Reader child(const std::string& key) {
    static const json kEmpty = json::object();
    const json* v = find(key);
    return Reader(v ? *v : kEmpty, field(key));
  }

  void get(const std::string& key, double& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
      dst = v->get<double>();
    }
  }
  void get(const std::string& key, int& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(field(key) + ": expected an integer");
      dst = v->get<int>();
    }
  }
  void get(const std::string& key, std::uint64_t& dst) {
    if (const json* v = find(key)) {
      if (!v->is_number_integer() || (v->is_number_integer() && !v->is_number_unsigned() && v->get<long long>() < 0)) {
        throw ConfigError(field(key) + ": expected a nonnegative integer");
      }
      dst = v->get<std::uint64_t>();
    }
  }
  void get(const std::string& key, bool& dst) {
    if (const json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(field(key) + ": expected true or false");
      dst = v->get<bool>();
    }
  }
  void get(const std::string& key, std::string& dst) {
    if (const json* v = find(key)) {
      if (!v->is_string()) throw ConfigError(field(key) + ": expected a string");
      dst = v->get<std::string>();
    }
  }
  void get(const std::string& key, std::vector<int>& dst) {
    if (const json* v = find(key)) {
      if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of integers");
      std::vector<int> out;
      for (const auto& e : *v) {
        if (!e.is_number_integer()) throw ConfigError(field(key) + ": expected an array of integers");
        out.push_back(e.get<int>());
      }
      dst = std::move(out);
    }
  }
  void get_numbers(const std::string& key, std::size_t n, std::vector<double>& dst) {
    if (const json* v = find(key)) {
      if (!v->is_array() || v->size() != n) {
        throw ConfigError(field(key) + ": expected an array of " + std::to_string(n) + " numbers");
      }
      std::vector<double> out;
      for (const auto& e : *v) {
        if (!e.is_number()) throw ConfigError(field(key) + ": expected numbers");
        out.push_back(e.get<double>());
      }
      dst = std::move(out);
    }
  }
  void get(const std::string& key, goals::Box& box) {
    std::vector<double> b;
    get_numbers(key, 4, b);
    if (!b.empty()) box = goals::Box::rect(b[0], b[1], b[2], b[3]);
  }
  void get(const std::string& key, envs::Vec2& p) {
    std::vector<double> b;
    get_numbers(key, 2, b);
    if (!b.empty()) p = {b[0], b[1]};
  }
  template <typename Enum, typename Parse>
  void get_enum(const std::string& key, Enum& dst, Parse parse) {
    std::string s;
    get(key, s);
    if (s.empty()) return;
    try {
      dst = parse(s);
    } catch (const ConfigError& e) {
      throw ConfigError(field(key) + ": " + e.what());
    }
  }

  void finish() const {
    for (auto it = j_.begin(); it != j_.end(); ++it) {
      if (!seen_.count(it.key())) throw ConfigError("unknown configuration key '" + field(it.key()) + "'");
    }
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

json box_json(const goals::Box& b) { return json::array({b.lo[0], b.hi[0], b.lo[1], b.hi[1]}); }

nn::TargetSync::Mode parse_sync(std::string_view s) {
  if (s == "hard") return nn::TargetSync::Mode::hard;
  if (s == "polyak") return nn::TargetSync::Mode::polyak;
  throw ConfigError("expected 'hard' or 'polyak'");
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  RunConfig c;
  Reader root(j, "");

  Reader env = root.child("env");
  env.get("name", c.env.name);
  auto& ph = c.env.physics;
  env.get("gravity", ph.gravity);
  env.get("max_hand_speed", ph.max_hand_speed);
  env.get("grasp_radius", ph.grasp_radius);
  env.get("ball_radius", ph.ball_radius);
  env.get("success_epsilon", ph.success_epsilon);
  env.get("horizon", ph.horizon);
  env.get("hand_workspace", ph.hand_workspace);
  env.get("target_region", ph.target_region);
  env.get("wall_x", ph.wall_x);
  env.get("wall_height", ph.wall_height);
  env.get("link1", c.env.arm.link1);
  env.get("link2", c.env.arm.link2);
  env.get("base", c.env.arm.base);
  env.get("max_joint_speed", c.env.arm.max_joint_speed);
  env.get("n_bits", c.env.bit_flip.n_bits);
  env.get("bit_flip_horizon", c.env.bit_flip.horizon);
  env.finish();

  Reader algo = root.child("algo");
  algo.get_enum("variant", c.algo.variant, her::parse_variant);
  algo.get("k_virtual", c.algo.k_virtual);
  {
    Reader grid = algo.child("grid");
    auto& g = c.algo.ibs.grid;
    grid.get("rows", g.rows);
    grid.get("cols", g.cols);
    goals::Box bounds = goals::Box::rect(g.x0, g.x1, g.y0, g.y1);
    grid.get("bounds", bounds);
    g.x0 = bounds.lo[0];
    g.x1 = bounds.hi[0];
    g.y0 = bounds.lo[1];
    g.y1 = bounds.hi[1];
    grid.finish();
  }
  algo.get("sigma_sq_init", c.algo.ibs.sigma_sq_init);
  algo.get("sigma_sq_final", c.algo.ibs.sigma_sq_final);
  algo.get("sigma_decay", c.algo.ibs.sigma_decay);
  algo.get("anneal_period_cycles", c.algo.ibs.anneal_period_cycles);
  algo.get("weight_floor", c.algo.ibs.weight_floor);
  algo.get("target_floor", c.algo.ibs.target_floor);
  {
    Reader per = algo.child("per");
    per.get("alpha", c.algo.per.alpha);
    per.get("beta_init", c.algo.per.beta_init);
    per.get("beta_final", c.algo.per.beta_final);
    per.get("priority_floor", c.algo.per.priority_floor);
    per.finish();
  }
  algo.finish();

  Reader agent = root.child("agent");
  auto& a = c.agent;
  agent.get("gamma", a.gamma);
  agent.get("buffer_capacity", a.buffer_capacity);
  agent.get("epsilon_init", a.epsilon_init);
  agent.get("epsilon_decay", a.epsilon_decay);
  agent.get("epsilon_final", a.epsilon_final);
  agent.get("noise_scale_fraction", a.noise_scale_fraction);
  agent.get("random_action_fraction", a.random_action_fraction);
  agent.get("batch_size", a.batch_size);
  agent.get("target_sync_period", a.target_sync_period);
  agent.get_enum("target_sync", a.target_sync, parse_sync);
  agent.get("polyak_tau", a.polyak_tau);
  agent.get_enum("optimizer", a.optimizer, nn::parse_optimizer);
  agent.get("actor_lr", a.actor_lr);
  agent.get("critic_lr", a.critic_lr);
  agent.get("clip_norm", a.clip_norm);
  agent.get("action_l2", a.action_l2);
  agent.get("actor_hidden", a.actor_hidden);
  agent.get("critic_hidden", a.critic_hidden);
  agent.get_enum("critic_norm", a.critic_norm, ddpg::parse_critic_norm);
  agent.get("norm_momentum", a.norm_momentum);
  agent.finish();

  Reader metrics = root.child("metrics");
  metrics.get("reference_sigma", c.metrics.reference_sigma);
  metrics.get("reference_floor", c.metrics.reference_floor);
  metrics.get("kl_reverse", c.metrics.kl_reverse);
  metrics.get("eval_episodes", c.metrics.eval_episodes);
  metrics.get("probe_episodes", c.metrics.probe_episodes);
  metrics.finish();

  Reader run = root.child("run");
  run.get("seed", c.run.seed);
  run.get("epochs", c.run.epochs);
  run.get("cycles", c.run.cycles);
  run.get("episodes", c.run.episodes);
  run.get("optimization_steps", c.run.optimization_steps);
  run.get("output_dir", c.run.output_dir);
  run.get("dump_buffer", c.run.dump_buffer);
  run.finish();

  root.finish();
  c.env.physics.wall = c.env.name == "hand-wall";
  c.validate();
  return c;
}

json RunConfig::to_json() const {
  const auto& ph = env.physics;
  const auto& g = algo.ibs.grid;
  json j;
  j["env"] = {{"name", env.name},
              {"gravity", ph.gravity},
              {"max_hand_speed", ph.max_hand_speed},
              {"grasp_radius", ph.grasp_radius},
              {"ball_radius", ph.ball_radius},
              {"success_epsilon", ph.success_epsilon},
              {"horizon", ph.horizon},
              {"hand_workspace", box_json(ph.hand_workspace)},
              {"target_region", box_json(ph.target_region)},
              {"wall_x", ph.wall_x},
              {"wall_height", ph.wall_height},
              {"link1", env.arm.link1},
              {"link2", env.arm.link2},
              {"base", json::array({env.arm.base[0], env.arm.base[1]})},
              {"max_joint_speed", env.arm.max_joint_speed},
              {"n_bits", env.bit_flip.n_bits},
              {"bit_flip_horizon", env.bit_flip.horizon}};
  j["algo"] = {{"variant", std::string(her::to_string(algo.variant))},
               {"k_virtual", algo.k_virtual},
               {"grid", {{"rows", g.rows}, {"cols", g.cols}, {"bounds", json::array({g.x0, g.x1, g.y0, g.y1})}}},
               {"sigma_sq_init", algo.ibs.sigma_sq_init},
               {"sigma_sq_final", algo.ibs.sigma_sq_final},
               {"sigma_decay", algo.ibs.sigma_decay},
               {"anneal_period_cycles", algo.ibs.anneal_period_cycles},
               {"weight_floor", algo.ibs.weight_floor},
               {"target_floor", algo.ibs.target_floor},
               {"per",
                {{"alpha", algo.per.alpha},
                 {"beta_init", algo.per.beta_init},
                 {"beta_final", algo.per.beta_final},
                 {"priority_floor", algo.per.priority_floor}}}};
  j["agent"] = {{"gamma", agent.gamma},
                {"buffer_capacity", agent.buffer_capacity},
                {"epsilon_init", agent.epsilon_init},
                {"epsilon_decay", agent.epsilon_decay},
                {"epsilon_final", agent.epsilon_final},
                {"noise_scale_fraction", agent.noise_scale_fraction},
                {"random_action_fraction", agent.random_action_fraction},
                {"batch_size", agent.batch_size},
                {"target_sync_period", agent.target_sync_period},
                {"target_sync", agent.target_sync == nn::TargetSync::Mode::hard ? "hard" : "polyak"},
                {"polyak_tau", agent.polyak_tau},
                {"optimizer", std::string(nn::to_string(agent.optimizer))},
                {"actor_lr", agent.actor_lr},
                {"critic_lr", agent.critic_lr},
                {"clip_norm", agent.clip_norm},
                {"action_l2", agent.action_l2},
                {"actor_hidden", agent.actor_hidden},
                {"critic_hidden", agent.critic_hidden},
                {"critic_norm", std::string(ddpg::to_string(agent.critic_norm))},
                {"norm_momentum", agent.norm_momentum}};
  j["metrics"] = {{"reference_sigma", metrics.reference_sigma},
                  {"reference_floor", metrics.reference_floor},
                  {"kl_reverse", metrics.kl_reverse},
                  {"eval_episodes", metrics.eval_episodes},
                  {"probe_episodes", metrics.probe_episodes}};
  j["run"] = {{"seed", run.seed},
              {"epochs", run.epochs},
              {"cycles", run.cycles},
              {"episodes", run.episodes},
              {"optimization_steps", run.optimization_steps},
              {"output_dir", run.output_dir},
              {"dump_buffer", run.dump_buffer}};
  return j;
}

void RunConfig::validate() const {
  if (env.name.empty()) throw ConfigError("env.name is required (bit-flip, hand, hand-wall or robot)");
  (void)make_env();
  her::HerConfig{algo.k_virtual, false, false}.validate();
  algo.ibs.validate();
  algo.per.validate();
  agent.validate();
  training_setup().schedule.validate();
  if (!(metrics.reference_sigma > 0.0)) throw ConfigError("metrics.reference_sigma must be positive");
  const bool ibs = algo.variant == her::Variant::her_ibs || algo.variant == her::Variant::filtered_her_ibs;
  if (ibs && env.name == "bit-flip") {
    throw ConfigError("algo.variant: IBS variants need a 2D goal space; bit-flip has none");
  }
}

std::unique_ptr<envs::Environment> make_env(const EnvBlock& env) {
  if (env.name == "bit-flip") return std::make_unique<envs::BitFlipEnv>(env.bit_flip);
  envs::ThrowPhysics ph = env.physics;
  if (env.name == "hand") {
    ph.wall = false;
    return std::make_unique<envs::HandEnv>(ph);
  }
  if (env.name == "hand-wall") {
    ph.wall = true;
    return std::make_unique<envs::HandEnv>(ph);
  }
  if (env.name == "robot") {
    ph.wall = false;
    return std::make_unique<envs::RobotEnv>(ph, env.arm);
  }
  throw ConfigError("env.name: unknown environment '" + env.name + "' (expected bit-flip, hand, hand-wall or robot)");
}

std::unique_ptr<envs::Environment> RunConfig::make_env() const { return cli::make_env(env); }

ddpg::TrainingSetup RunConfig::training_setup() const {
  ddpg::TrainingSetup s;
  s.agent = agent;
  s.her = her::HerConfig::from_variant(algo.variant, algo.k_virtual);
  s.ibs = algo.ibs;
  s.per = algo.per;
  s.schedule = {run.epochs, run.cycles, run.episodes, run.optimization_steps, metrics.eval_episodes,
                metrics.probe_episodes};
  s.reference_sigma = metrics.reference_sigma;
  s.reference_floor = metrics.reference_floor;
  s.kl_reverse = metrics.kl_reverse;
  s.seed = run.seed;
  return s;
}

void apply_override(json& j, std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) {
    throw ConfigError("override '" + std::string(assignment) + "' must look like key.path=value");
  }
  const std::string path(assignment.substr(0, eq));
  const std::string raw(assignment.substr(eq + 1));
  json value = json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (key.empty()) throw ConfigError("override path '" + path + "' has an empty component");
    if (!node->is_object()) {
      if (!node->is_null()) throw ConfigError("override path '" + path + "' descends into a non-object");
      *node = json::object();
    }
    if (dot == std::string::npos) {
      (*node)[key] = value;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  json j = json::parse(in, nullptr, false, true);
  if (j.is_discarded()) throw ConfigError("config file " + path.string() + " is not valid JSON");
  return j;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  json j = path.empty() ? json::object() : read_json_file(path);
  for (const auto& o : overrides) apply_override(j, o);
  return RunConfig::from_json(j);
}

}  // namespace ibsher::cli
