#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "ibsher/ddpg/training.hpp"
#include "ibsher/envs/bit_flip.hpp"
#include "ibsher/envs/throwing.hpp"

namespace ibsher::cli {

struct EnvBlock {
  std::string name;  // bit-flip, hand, hand-wall, robot; required
  envs::ThrowPhysics physics;
  envs::ArmGeometry arm;
  envs::BitFlipConfig bit_flip;
};

struct AlgoBlock {
  her::Variant variant = her::Variant::filtered_her_ibs;
  int k_virtual = 4;
  her::IbsConfig ibs;
  replay::PerConfig per;
};

struct MetricsBlock {
  double reference_sigma = 0.2;
  double reference_floor = 0.002;
  bool kl_reverse = false;  // false: KL(target || proposal)
  int eval_episodes = 50;
  int probe_episodes = 50;
};

struct RunBlock {
  std::uint64_t seed = 0;
  int epochs = 50;
  int cycles = 50;
  int episodes = 16;
  int optimization_steps = 40;
  std::string output_dir;  // empty: <output root>/<env>_<variant>_s<seed>
  bool dump_buffer = true;
};

/// Fully resolved run configuration. Every field except env.name has a default.
struct RunConfig {
  EnvBlock env;
  AlgoBlock algo;
  ddpg::AgentConfig agent;
  MetricsBlock metrics;
  RunBlock run;

  /// Unknown keys and ill-typed values raise ConfigError naming the dotted field path.
  static RunConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::json to_json() const;
  void validate() const;

  [[nodiscard]] std::unique_ptr<envs::Environment> make_env() const;
  [[nodiscard]] ddpg::TrainingSetup training_setup() const;
};

/// Applies `a.b.c=value`; the value is parsed as JSON when possible, otherwise kept as a string.
void apply_override(nlohmann::json& j, std::string_view assignment);

nlohmann::json read_json_file(const std::filesystem::path& path);
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides);

std::unique_ptr<envs::Environment> make_env(const EnvBlock& env);

}  // namespace ibsher::cli
