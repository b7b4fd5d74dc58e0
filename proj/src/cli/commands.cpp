#include "ibsher/cli/commands.hpp"

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>

#include "ibsher/nn/checkpoint.hpp"

namespace ibsher::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  return out;
}

std::vector<double> parse_numbers(const std::string& text, std::size_t expected, const std::string& what) {
  std::vector<double> out;
  std::istringstream in(text);
  for (std::string cell; std::getline(in, cell, ',');) {
    char* end = nullptr;
    const double v = std::strtod(cell.c_str(), &end);
    if (cell.empty() || *end != '\0') throw ConfigError(what + ": '" + cell + "' is not a number");
    out.push_back(v);
  }
  if (out.size() != expected) {
    throw ConfigError(what + ": expected " + std::to_string(expected) + " comma-separated numbers");
  }
  return out;
}

goals::GaussianMixture gmm_from_json(const json& j) {
  if (!j.is_object() || !j.contains("components") || !j["components"].is_array()) {
    throw ConfigError("GMM file needs a 'components' array");
  }
  goals::GaussianMixture gmm;
  for (const auto& c : j["components"]) {
    goals::GaussianComponent comp;
    try {
      comp.weight = c.at("weight").get<double>();
      comp.mean = c.at("mean").get<Vec>();
      const auto rows = c.at("cov").get<std::vector<Vec>>();
      comp.cov.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.size()));
      for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != rows.size()) throw ConfigError("GMM covariance must be square");
        for (std::size_t k = 0; k < rows.size(); ++k) {
          comp.cov(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = rows[i][k];
        }
      }
    } catch (const json::exception& e) {
      throw ConfigError(std::string("GMM component: ") + e.what());
    }
    gmm.components.push_back(std::move(comp));
  }
  return gmm;
}

std::string dir_name(const RunConfig& cfg) {
  return cfg.env.name + "_" + std::string(her::to_string(cfg.algo.variant)) + "_s" + std::to_string(cfg.run.seed);
}

// Temp sibling directory, removed unless released.
class StagingDir {
 public:
  explicit StagingDir(const fs::path& final_dir) {
    const fs::path parent = final_dir.has_parent_path() ? final_dir.parent_path() : fs::path(".");
    fs::create_directories(parent);
    path_ = parent / ("." + final_dir.filename().string() + ".tmp-" + std::to_string(::getpid()));
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  StagingDir(const StagingDir&) = delete;
  StagingDir& operator=(const StagingDir&) = delete;
  ~StagingDir() {
    std::error_code ec;
    if (!released_) fs::remove_all(path_, ec);
  }
  [[nodiscard]] const fs::path& path() const { return path_; }
  void commit(const fs::path& final_dir, bool overwrite) {
    if (fs::exists(final_dir)) {
      if (!overwrite) throw ConfigError("run directory " + final_dir.string() + " exists (use --overwrite)");
      fs::remove_all(final_dir);
    }
    fs::rename(path_, final_dir);
    released_ = true;
  }

 private:
  fs::path path_;
  bool released_ = false;
};

}  // namespace

fs::path output_root() {
  const char* env = std::getenv("IBSHER_OUTPUT_ROOT");
  return (env != nullptr && *env != '\0') ? fs::path(env) : fs::path("runs");
}

fs::path run_directory(const RunConfig& cfg) {
  if (!cfg.run.output_dir.empty()) return cfg.run.output_dir;
  return output_root() / dir_name(cfg);
}

void write_run_directory(const fs::path& dir, const RunConfig& cfg, const ddpg::RunArtifacts& run,
                         bool overwrite) {
  if (fs::exists(dir) && !overwrite) {
    throw ConfigError("run directory " + dir.string() + " exists (use --overwrite)");
  }
  StagingDir stage(dir);
  const fs::path& tmp = stage.path();
  {
    auto out = open_out(tmp / "config.json");
    out << cfg.to_json().dump(2) << '\n';
  }
  metrics::write_learning_curves(tmp / "curves.csv", run.curves);
  fs::create_directories(tmp / "checkpoints");
  nn::save_checkpoint(run.ac.actor, tmp / "checkpoints" / "actor.ckpt");
  nn::save_checkpoint(run.ac.critic, tmp / "checkpoints" / "critic.ckpt");
  fs::create_directories(tmp / "heatmaps");
  if (run.tracker) {
    goals::save_grid_csv(tmp / "heatmaps" / "target.csv", *run.reference_target, cfg.metrics.reference_sigma,
                         "target");
    goals::save_grid_csv(tmp / "heatmaps" / "q_star.csv", run.tracker->target_q_star(),
                         std::sqrt(run.tracker->sigma_sq()), "q_star");
    goals::save_grid_csv(tmp / "heatmaps" / "proposal.csv", run.tracker->proposal_distribution(),
                         std::sqrt(run.tracker->sigma_sq()), "proposal");
  }
  if (cfg.run.dump_buffer) {
    auto out = open_out(tmp / "buffer-dump.csv");
    ddpg::write_buffer_dump(out, run.buffer);
  }
  stage.commit(dir, overwrite);
}

fs::path cmd_train(const TrainOptions& opt, std::ostream& log) {
  const RunConfig cfg = load_run_config(opt.config, opt.overrides);
  const fs::path dir = run_directory(cfg);
  if (fs::exists(dir) && !opt.overwrite) {
    throw ConfigError("run directory " + dir.string() + " exists (use --overwrite)");
  }
  const auto env = cfg.make_env();
  const auto run = ddpg::run_training(*env, cfg.algo.variant, cfg.training_setup(), [&](const metrics::CurveRow& r) {
    log << "epoch " << r.epoch << " success " << metrics::format_real(r.success_rate) << " q0 "
        << metrics::format_real(r.q0_estimate) << " return " << metrics::format_real(r.empirical_return)
        << " kl " << metrics::format_real(r.kl_to_target) << '\n';
  });
  write_run_directory(dir, cfg, run, opt.overwrite);
  log << "wrote " << dir.string() << '\n';
  return dir;
}

void write_eval_csv(std::ostream& out, const metrics::EvalReport& r) {
  using metrics::format_real;
  out << kEvalHeader << '\n'
      << 0 << ',' << format_real(r.success_rate) << ',' << format_real(r.final_success_rate) << ','
      << format_real(r.mean_final_distance) << ',' << format_real(r.q0_estimate) << ','
      << format_real(r.empirical_return) << ',' << format_real(r.kl_to_target) << ',' << r.n_episodes << '\n';
  if (!out) throw IoError("failed writing eval CSV");
}

metrics::EvalReport cmd_eval(const EvalOptions& opt, std::ostream& out) {
  if (opt.n_episodes < 1) throw ConfigError("--episodes must be at least 1");
  const RunConfig cfg = load_run_config(opt.env_config, opt.overrides);
  const auto env = cfg.make_env();
  const nn::Mlp actor = nn::load_checkpoint(opt.actor);
  const auto obs_goal = static_cast<int>(env->observation_dim() + env->goal_dim());
  const auto act_dim = static_cast<int>(env->action_dim());
  if (actor.input_dim() != obs_goal || actor.output_dim() != act_dim) {
    throw ConfigError("actor checkpoint maps " + std::to_string(actor.input_dim()) + " -> " +
                      std::to_string(actor.output_dim()) + " but " + env->name() + " needs " +
                      std::to_string(obs_goal) + " -> " + std::to_string(act_dim));
  }
  std::optional<nn::Mlp> critic;
  if (!opt.critic.empty()) {
    critic = nn::load_checkpoint(opt.critic);
    if (critic->input_dim() != obs_goal + act_dim || critic->output_dim() != 1) {
      throw ConfigError("critic checkpoint is incompatible with " + env->name());
    }
  }
  const ddpg::ActionSpace space{env->action_low(), env->action_high(), env->binary_actions()};
  const metrics::PolicyFn policy = [&](std::span<const double> x) {
    nn::Matrix row(1, static_cast<Eigen::Index>(x.size()));
    for (std::size_t i = 0; i < x.size(); ++i) row(0, static_cast<Eigen::Index>(i)) = x[i];
    const nn::Matrix a = ddpg::policy(actor, space, row);
    return Vec(a.data(), a.data() + a.size());
  };
  const metrics::QFn q = [&](std::span<const double> x, std::span<const double> a) {
    return critic ? ddpg::q_value(*critic, x, a, cfg.agent.q_min()) : metrics::kNaN;
  };
  auto report = metrics::evaluate_policy(*env, policy, opt.n_episodes, opt.seed);
  const auto probe = metrics::q_bias_probe(*env, policy, q, opt.n_episodes, cfg.agent.gamma, mix_seed(opt.seed, 1));
  report.q0_estimate = probe.q0_estimate;
  report.empirical_return = probe.empirical_return;

  out << "success_rate " << metrics::format_real(report.success_rate) << '\n'
      << "final_success_rate " << metrics::format_real(report.final_success_rate) << '\n'
      << "mean_final_distance " << metrics::format_real(report.mean_final_distance) << '\n'
      << "q0_estimate " << metrics::format_real(report.q0_estimate) << '\n'
      << "empirical_return " << metrics::format_real(report.empirical_return) << '\n'
      << "n_episodes " << report.n_episodes << '\n';
  if (!opt.out.empty()) {
    auto file = open_out(opt.out);
    write_eval_csv(file, report);
  }
  return report;
}

goals::GoalDistributionSpec parse_distribution(const std::string& dist) {
  static const std::string kUniform = "uniform:";
  goals::GoalDistributionSpec spec;
  if (dist.rfind(kUniform, 0) == 0) {
    const auto b = parse_numbers(dist.substr(kUniform.size()), 4, "--dist uniform");
    spec.variant = goals::Box::rect(b[0], b[1], b[2], b[3]);
  } else if (!dist.empty()) {
    spec.variant = gmm_from_json(read_json_file(dist));
  } else {
    throw ConfigError("--dist is required (uniform:x0,x1,y0,y1 or a GMM JSON file)");
  }
  spec.validate();
  if (spec.dim() != 2) throw ConfigError("--dist must describe a 2D goal density");
  return spec;
}

goals::GridSpec parse_grid(int rows, int cols, const std::string& bounds) {
  const auto b = parse_numbers(bounds, 4, "--bounds");
  goals::GridSpec grid{rows, cols, b[0], b[1], b[2], b[3]};
  grid.validate();
  return grid;
}

VgdistResult cmd_vgdist(const VgdistOptions& opt, std::ostream& out) {
  if (!(opt.sigma > 0.0)) throw ConfigError("--sigma must be positive");
  const auto spec = parse_distribution(opt.dist);
  const auto grid = parse_grid(opt.rows, opt.cols, opt.bounds);
  VgdistResult result{goals::build_target_grid(spec, opt.sigma, grid, opt.floor), std::nullopt};
  if (opt.out.empty()) {
    goals::write_grid_csv(out, result.target, opt.sigma, "target");
  } else {
    goals::save_grid_csv(opt.out, result.target, opt.sigma, "target");
  }
  if (!opt.from_dump.empty()) {
    result.proposal = metrics::vg_distribution_report(replay::load_dump(opt.from_dump), grid, result.target,
                                                      opt.reverse);
    if (!opt.proposal_out.empty()) {
      goals::save_grid_csv(opt.proposal_out, result.proposal->proposal, opt.sigma, "proposal");
    }
    out << "kl " << metrics::format_real(result.proposal->kl) << " n_virtual " << result.proposal->n_virtual
        << '\n';
  }
  return result;
}

BiasStudy run_bias_study(const RunConfig& base, const std::vector<std::uint64_t>& seeds, std::ostream* log) {
  if (seeds.size() < 2) throw ConfigError("the bias study needs at least two seeds");
  if (base.env.name != "bit-flip") throw ConfigError("env.name: the bias study runs on bit-flip");
  BiasStudy study;
  std::vector<double> bias_her;
  std::vector<double> bias_filtered;
  for (const auto seed : seeds) {
    BiasRow pair[2];
    int i = 0;
    for (const auto variant : {her::Variant::her, her::Variant::filtered_her}) {
      RunConfig cfg = base;
      cfg.algo.variant = variant;
      cfg.run.seed = seed;
      const auto env = cfg.make_env();
      const auto run = ddpg::run_training(*env, variant, cfg.training_setup());
      std::vector<replay::DumpRow> dump;
      for (const auto slot : run.buffer.slots_oldest_first()) dump.push_back(run.buffer.dump_row(slot));
      BiasRow& row = pair[i++];
      row.seed = seed;
      row.variant = variant;
      const auto& last = run.curves.back();
      row.final_success = last.success_rate;
      row.q0_estimate = last.q0_estimate;
      row.empirical_return = last.empirical_return;
      row.misleading_transitions = metrics::count_misleading(dump, *env);
      if (log != nullptr) {
        *log << "seed " << seed << ' ' << her::to_string(variant) << " success "
             << metrics::format_real(row.final_success) << " bias " << metrics::format_real(row.bias())
             << " misleading " << row.misleading_transitions << '\n';
      }
      study.rows.push_back(row);
    }
    bias_her.push_back(pair[0].bias());
    bias_filtered.push_back(pair[1].bias());
    if (pair[0].bias() > pair[1].bias()) ++study.summary.seeds_bias_her_gt_filtered;
    if (pair[1].final_success >= pair[0].final_success) ++study.summary.seeds_success_filtered_ge_her;
  }
  study.summary.median_bias_her = metrics::percentile(bias_her, 50.0);
  study.summary.median_bias_filtered = metrics::percentile(bias_filtered, 50.0);
  return study;
}

void write_bias_study(std::ostream& out, const BiasStudy& study) {
  using metrics::format_real;
  out << "seed,variant,final_success,q0_estimate,empirical_return,bias,misleading_transitions,median_bias_her,"
         "median_bias_filtered,seeds_bias_her_gt_filtered,seeds_success_filtered_ge_her\n";
  for (const auto& r : study.rows) {
    out << r.seed << ',' << her::to_string(r.variant) << ',' << format_real(r.final_success) << ','
        << format_real(r.q0_estimate) << ',' << format_real(r.empirical_return) << ',' << format_real(r.bias())
        << ',' << r.misleading_transitions << ",,,,\n";
  }
  const auto& s = study.summary;
  out << ",summary,,,,,," << format_real(s.median_bias_her) << ',' << format_real(s.median_bias_filtered) << ','
      << s.seeds_bias_her_gt_filtered << ',' << s.seeds_success_filtered_ge_her << '\n';
  if (!out) throw IoError("failed writing bias study");
}

BiasStudy cmd_bias_study(const BiasStudyOptions& opt, std::ostream& out, std::ostream& log) {
  std::vector<std::string> overrides{"env.name=bit-flip", "algo.variant=her"};
  overrides.insert(overrides.end(), opt.overrides.begin(), opt.overrides.end());
  const RunConfig base = load_run_config(opt.config, overrides);
  const auto study = run_bias_study(base, opt.seeds, &log);
  if (opt.out.empty()) {
    write_bias_study(out, study);
  } else {
    auto file = open_out(opt.out);
    write_bias_study(file, study);
  }
  return study;
}

metrics::Table cmd_aggregate(const std::vector<fs::path>& inputs, const fs::path& out, std::ostream& stdout_stream) {
  if (inputs.empty()) throw ConfigError("aggregate needs at least one input CSV");
  std::vector<metrics::Table> tables;
  for (const auto& p : inputs) tables.push_back(metrics::load_table(p));
  auto agg = metrics::aggregate_runs(tables);
  if (out.empty()) {
    metrics::write_table(stdout_stream, agg);
  } else {
    auto file = open_out(out);
    metrics::write_table(file, agg);
  }
  return agg;
}

}  // namespace ibsher::cli
