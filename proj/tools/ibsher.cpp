// ibsher: train, evaluate and inspect multi-goal agents.
//
// Exit codes: 0 success, 1 I/O or internal failure, 2 invalid configuration or
// arguments, 3 numeric failure during training.

#include <CLI11.hpp>

#include <iostream>

#include "ibsher/cli/commands.hpp"

namespace {

using namespace ibsher;

int run(int argc, char** argv) {
  CLI::App app{"Hindsight relabeling with instructive virtual goals"};
  app.require_subcommand(1);

  cli::TrainOptions train;
  auto* train_cmd = app.add_subcommand("train", "train one agent and write a run directory");
  train_cmd->add_option("--config", train.config, "JSON run configuration");
  train_cmd->add_option("--set", train.overrides, "dotted override, e.g. run.seed=3");
  train_cmd->add_flag("--overwrite", train.overwrite, "replace an existing run directory");

  cli::EvalOptions eval;
  auto* eval_cmd = app.add_subcommand("eval", "evaluate a saved actor");
  eval_cmd->add_option("--actor", eval.actor, "actor checkpoint")->required();
  eval_cmd->add_option("--critic", eval.critic, "critic checkpoint (enables q0_estimate)");
  eval_cmd->add_option("--config", eval.env_config, "JSON configuration naming the environment");
  eval_cmd->add_option("--set", eval.overrides, "dotted override");
  eval_cmd->add_option("--episodes", eval.n_episodes, "evaluation episodes")->capture_default_str();
  eval_cmd->add_option("--seed", eval.seed, "reset seed")->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "one-row CSV report");

  cli::VgdistOptions vg;
  auto* vg_cmd = app.add_subcommand("vgdist", "target grid for a goal density, optionally against a buffer dump");
  vg_cmd->add_option("--dist", vg.dist, "uniform:x0,x1,y0,y1 or a GMM JSON file")->required();
  vg_cmd->add_option("--sigma", vg.sigma, "kernel width")->capture_default_str();
  vg_cmd->add_option("--rows", vg.rows)->capture_default_str();
  vg_cmd->add_option("--cols", vg.cols)->capture_default_str();
  vg_cmd->add_option("--bounds", vg.bounds, "x0,x1,y0,y1")->capture_default_str();
  vg_cmd->add_option("--floor", vg.floor, "minimum cell mass")->capture_default_str();
  vg_cmd->add_option("--out", vg.out, "target grid CSV (stdout if omitted)");
  vg_cmd->add_option("--from-dump", vg.from_dump, "buffer-dump.csv to histogram");
  vg_cmd->add_option("--proposal-out", vg.proposal_out, "proposal grid CSV");
  vg_cmd->add_flag("--reverse", vg.reverse, "report KL(proposal || target)");

  cli::BiasStudyOptions bias;
  auto* bias_cmd = app.add_subcommand("bias-study", "HER against Filtered-HER on bit-flip");
  bias_cmd->add_option("--seeds", bias.seeds, "two or more seeds")->required();
  bias_cmd->add_option("--config", bias.config, "base JSON configuration");
  bias_cmd->add_option("--set", bias.overrides, "dotted override");
  bias_cmd->add_option("--out", bias.out, "comparison CSV (stdout if omitted)");

  std::vector<std::filesystem::path> agg_inputs;
  std::filesystem::path agg_out;
  auto* agg_cmd = app.add_subcommand("aggregate", "per-epoch percentiles across runs");
  agg_cmd->add_option("inputs", agg_inputs, "curves.csv or eval CSV files")->required();
  agg_cmd->add_option("--out", agg_out, "aggregate CSV (stdout if omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*train_cmd) {
      cli::cmd_train(train, std::cerr);
    } else if (*eval_cmd) {
      cli::cmd_eval(eval, std::cout);
    } else if (*vg_cmd) {
      cli::cmd_vgdist(vg, std::cout);
    } else if (*bias_cmd) {
      cli::cmd_bias_study(bias, std::cout, std::cerr);
    } else if (*agg_cmd) {
      cli::cmd_aggregate(agg_inputs, agg_out, std::cout);
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const ShapeError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const PreconditionError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const NumericError& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run(argc, argv); }
