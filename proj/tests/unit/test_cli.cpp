#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "ibsher/cli/commands.hpp"
#include "ibsher/goals/grid.hpp"
#include "ibsher/nn/checkpoint.hpp"
#include "ibsher/replay/transition.hpp"
#include "support.hpp"

#ifndef IBSHER_CLI_PATH
#error "IBSHER_CLI_PATH must name the ibsher binary"
#endif

using namespace ibsher;
namespace fs = std::filesystem;

namespace {

// Small enough that a full train finishes in well under a second.
const char* kTinyRun = R"({
  "env": {"name": "bit-flip", "n_bits": 3},
  "algo": {"variant": "filtered-her"},
  "agent": {"actor_hidden": [8], "critic_hidden": [8], "batch_size": 8, "buffer_capacity": 2000},
  "metrics": {"eval_episodes": 3, "probe_episodes": 2},
  "run": {"seed": 4, "epochs": 2, "cycles": 2, "episodes": 2, "optimization_steps": 3}
})";

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / ("ibsher_cli_" + std::to_string(::getpid()) + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    write_file("tiny.json", kTinyRun);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  void write_file(const std::string& name, const std::string& text) const {
    std::ofstream out(path(name));
    out << text;
  }

  static std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  // Exit status of `ibsher <args>`; stdout goes to out.txt.
  int run(const std::string& args) const {
    const std::string cmd = std::string("\"") + IBSHER_CLI_PATH + "\" " + args + " > \"" +
                            path("out.txt").string() + "\" 2> \"" + path("err.txt").string() + "\"";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  std::string stdout_text() const { return read_file(path("out.txt")); }

  std::string train(const std::string& out_name, const std::string& extra = "") const {
    const fs::path out = path(out_name);
    const int code = run("train --config " + path("tiny.json").string() + " --set run.output_dir=" + out.string() +
                         " " + extra);
    EXPECT_EQ(code, 0) << read_file(path("err.txt"));
    return out.string();
  }

  fs::path dir_;
};

}  // namespace

TEST_F(CliTest, MissingEnvNameIsAConfigError) {
  write_file("bad.json", R"({"run": {"epochs": 1}})");
  EXPECT_EQ(run("train --config " + path("bad.json").string()), 2);
}

TEST_F(CliTest, UnknownKeyIsAConfigError) {
  EXPECT_EQ(run("train --config " + path("tiny.json").string() + " --set agent.gama=0.9"), 2);
  EXPECT_NE(read_file(path("err.txt")).find("agent.gama"), std::string::npos);
}

TEST_F(CliTest, BadArgumentsExitTwo) {
  EXPECT_EQ(run("train --no-such-flag"), 2);
  EXPECT_EQ(run("frobnicate"), 2);
}

TEST_F(CliTest, OverridesApply) {
  const auto cfg = cli::load_run_config(path("tiny.json"), {"run.seed=9", "agent.gamma=0.5", "algo.variant=her"});
  EXPECT_EQ(cfg.run.seed, 9u);
  EXPECT_EQ(cfg.agent.gamma, 0.5);
  EXPECT_EQ(cfg.algo.variant, her::Variant::her);
  EXPECT_EQ(cfg.env.bit_flip.n_bits, 3);
  EXPECT_THROW((void)cli::load_run_config(path("tiny.json"), {"run.seed"}), ConfigError);
}

TEST_F(CliTest, TrainWritesEveryArtifact) {
  const fs::path out = train("run");
  for (const char* f : {"config.json", "curves.csv", "checkpoints/actor.ckpt", "checkpoints/critic.ckpt",
                        "heatmaps", "buffer-dump.csv"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  const auto curves = metrics::load_table(out / "curves.csv");
  EXPECT_EQ(curves.rows.size(), 2u);
  std::ifstream in(out / "curves.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, metrics::kCurvesHeader);
  // Nothing but the finished run is left next to it.
  std::size_t entries = 0;
  for (const auto& e : fs::directory_iterator(dir_)) entries += e.is_directory() ? 1 : 0;
  EXPECT_EQ(entries, 1u);
}

TEST_F(CliTest, HandRunWritesHeatmaps) {
  const fs::path out = train("hand", "--set env.name=hand --set env.horizon=5 --set algo.variant=filtered-her-ibs");
  for (const char* f : {"heatmaps/target.csv", "heatmaps/proposal.csv", "heatmaps/q_star.csv"}) {
    ASSERT_TRUE(fs::exists(out / f)) << f;
    std::ifstream in(out / f);
    EXPECT_NEAR(goals::read_grid_csv(in).sum(), 1.0, 1e-9) << f;
  }
}

TEST_F(CliTest, ExistingRunDirectoryNeedsOverwrite) {
  const fs::path out = train("run");
  const std::string args = "train --config " + path("tiny.json").string() + " --set run.output_dir=" + out.string();
  EXPECT_EQ(run(args), 2);
  EXPECT_EQ(run(args + " --overwrite"), 0);
}

TEST_F(CliTest, SameSeedRunsAreByteIdentical) {
  const fs::path a = train("a");
  const fs::path b = train("b");
  EXPECT_EQ(read_file(a / "curves.csv"), read_file(b / "curves.csv"));
  EXPECT_EQ(read_file(a / "buffer-dump.csv"), read_file(b / "buffer-dump.csv"));
  const fs::path c = train("c", "--set run.seed=5");
  EXPECT_NE(read_file(a / "buffer-dump.csv"), read_file(c / "buffer-dump.csv"));
}

TEST_F(CliTest, ConfigSnapshotReproducesTheRun) {
  const fs::path a = train("a");
  const fs::path b = path("b");
  ASSERT_EQ(run("train --config " + (a / "config.json").string() + " --set run.output_dir=" + b.string()), 0);
  EXPECT_EQ(read_file(a / "curves.csv"), read_file(b / "curves.csv"));
  EXPECT_EQ(read_file(a / "buffer-dump.csv"), read_file(b / "buffer-dump.csv"));
}

TEST_F(CliTest, EvalRejectsBadInputs) {
  const fs::path out = train("run");
  const std::string actor = (out / "checkpoints/actor.ckpt").string();
  EXPECT_EQ(run("eval --actor " + actor + " --config " + path("tiny.json").string() + " --episodes 0"), 2);
  // A 3-bit actor cannot drive a 5-bit environment.
  EXPECT_EQ(run("eval --actor " + actor + " --config " + path("tiny.json").string() + " --set env.n_bits=5"), 2);
  EXPECT_EQ(run("eval --actor " + actor + " --config " + path("tiny.json").string()), 0);
}

TEST_F(CliTest, EvalOfOracleActorAndAggregate) {
  nn::save_checkpoint(test::one_bit_oracle_actor(), path("oracle.ckpt"));
  const std::string base = "eval --actor " + path("oracle.ckpt").string() + " --config " + path("tiny.json").string() +
                           " --set env.n_bits=1 --episodes 20";
  ASSERT_EQ(run(base + " --seed 1 --out " + path("e1.csv").string()), 0) << read_file(path("err.txt"));
  ASSERT_EQ(run(base + " --seed 2 --out " + path("e2.csv").string()), 0);
  const auto t = metrics::load_table(path("e1.csv"));
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("success_rate")], 1.0);
  EXPECT_EQ(t.rows[0][t.column("n_episodes")], 20.0);

  ASSERT_EQ(run("aggregate " + path("e1.csv").string() + " " + path("e2.csv").string() + " --out " +
                path("agg.csv").string()),
            0);
  const auto agg = metrics::load_table(path("agg.csv"));
  ASSERT_EQ(agg.rows.size(), 1u);
  EXPECT_EQ(agg.rows[0][agg.column("success_rate_p50")], 1.0);
}

TEST_F(CliTest, AggregateReadsCurves) {
  const fs::path a = train("a");
  const fs::path b = train("b", "--set run.seed=6");
  ASSERT_EQ(run("aggregate " + (a / "curves.csv").string() + " " + (b / "curves.csv").string()), 0);
  std::istringstream in(stdout_text());
  const auto agg = metrics::read_table(in);
  EXPECT_EQ(agg.rows.size(), 2u);
  EXPECT_EQ(agg.header.front(), "epoch");
  EXPECT_EQ(run("aggregate " + path("missing.csv").string()), 1);
}

TEST_F(CliTest, VgdistUnitScreenSumsToOne) {
  ASSERT_EQ(run("vgdist --dist uniform:0.55,0.95,0.05,0.95 --out " + path("t.csv").string()), 0);
  std::ifstream in(path("t.csv"));
  const auto grid = goals::read_grid_csv(in);
  EXPECT_NEAR(grid.sum(), 1.0, 1e-9);
  EXPECT_EQ(grid.values.size(), 400u);
  for (double v : grid.values) EXPECT_GE(v, 0.002 / 1.0 - 1e-12);
}

TEST_F(CliTest, VgdistInvalidSpecs) {
  EXPECT_EQ(run("vgdist --dist uniform:0,1,0"), 2);
  EXPECT_EQ(run("vgdist --dist uniform:1,0,0,1"), 2);
  EXPECT_EQ(run("vgdist --dist uniform:0,1,0,1 --sigma 0"), 2);
  write_file("bad_gmm.json", R"({"components": [{"weight": 1, "mean": [0.5, 0.5], "cov": [[1, 2], [2, 1]]}]})");
  EXPECT_EQ(run("vgdist --dist " + path("bad_gmm.json").string()), 2);
}

TEST_F(CliTest, VgdistGmmMatchesLibrary) {
  write_file("gmm.json", R"({"components": [
    {"weight": 0.3, "mean": [0.3, 0.6], "cov": [[0.01, 0.0], [0.0, 0.02]]},
    {"weight": 0.7, "mean": [0.7, 0.3], "cov": [[0.02, 0.005], [0.005, 0.01]]}]})");
  ASSERT_EQ(run("vgdist --dist " + path("gmm.json").string() + " --rows 8 --cols 10 --out " + path("g.csv").string()),
            0);
  std::ifstream in(path("g.csv"));
  const auto from_cli = goals::read_grid_csv(in);
  const auto spec = cli::parse_distribution(path("gmm.json").string());
  const auto direct = goals::build_target_grid(spec, 0.2, cli::parse_grid(8, 10, "0,1,0,1"), 0.002);
  ASSERT_EQ(from_cli.values.size(), direct.values.size());
  for (std::size_t i = 0; i < direct.values.size(); ++i) EXPECT_NEAR(from_cli.values[i], direct.values[i], 1e-15);
}

TEST_F(CliTest, VgdistDumpDrawnFromTargetHasSmallKl) {
  const auto grid = cli::parse_grid(20, 20, "0,1,0,1");
  const auto target = goals::build_target_grid(cli::parse_distribution("uniform:0.55,0.95,0.05,0.95"), 0.2, grid, 0.002);
  Rng rng(17);
  std::discrete_distribution<std::size_t> cell(target.values.begin(), target.values.end());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  {
    std::ofstream out(path("dump.csv"));
    replay::write_dump_header(out, 2);
    for (int k = 0; k < 100000; ++k) {
      const std::size_t c = cell(rng);
      const double x = (static_cast<double>(c % 20) + u(rng)) / 20.0;
      const double y = (static_cast<double>(c / 20) + u(rng)) / 20.0;
      replay::write_dump_row(out, {{0.1, 0.1}, {x, y}, -1.0, true});
    }
  }
  ASSERT_EQ(run("vgdist --dist uniform:0.55,0.95,0.05,0.95 --out " + path("t.csv").string() + " --from-dump " +
                path("dump.csv").string() + " --proposal-out " + path("p.csv").string()),
            0)
      << read_file(path("err.txt"));
  std::istringstream in(stdout_text());
  std::string kl_word, n_word;
  double kl = -1.0;
  std::size_t n = 0;
  in >> kl_word >> kl >> n_word >> n;
  EXPECT_EQ(kl_word, "kl");
  EXPECT_EQ(n, 100000u);
  EXPECT_GE(kl, 0.0);
  EXPECT_LT(kl, 0.05);
  EXPECT_TRUE(fs::exists(path("p.csv")));
}

TEST_F(CliTest, BiasStudySchema) {
  ASSERT_EQ(run("bias-study --seeds 1 2 --config " + path("tiny.json").string() + " --out " + path("b.csv").string()),
            0)
      << read_file(path("err.txt"));
  std::ifstream in(path("b.csv"));
  std::string line;
  std::vector<std::string> lines;
  while (std::getline(in, line)) lines.push_back(line);
  ASSERT_EQ(lines.size(), 1u + 2u * 2u + 1u);
  EXPECT_EQ(lines[0].rfind("seed,variant,", 0), 0u);
  EXPECT_EQ(lines[1].rfind("1,her,", 0), 0u);
  EXPECT_EQ(lines[2].rfind("1,filtered-her,", 0), 0u);
  EXPECT_EQ(lines.back().rfind(",summary,", 0), 0u);
  EXPECT_EQ(run("bias-study --seeds 1 --config " + path("tiny.json").string()), 2);
}
