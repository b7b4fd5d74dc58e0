// End-to-end acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// when any criterion fails. Criteria can be selected by name: `acceptance AC1 AC9`.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unistd.h>

#include "ibsher/cli/commands.hpp"
#include "ibsher/goals/distribution.hpp"
#include "ibsher/goals/grid.hpp"
#include "ibsher/her/ibs.hpp"
#include "ibsher/metrics/evaluation.hpp"
#include "ibsher/replay/per_buffer.hpp"
#include "ibsher/replay/sum_tree.hpp"
#include "support.hpp"

using namespace ibsher;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  std::ostringstream s;
  s << v;
  return s.str();
}

cli::RunConfig config(const std::vector<std::string>& overrides) { return cli::load_run_config({}, overrides); }

std::vector<replay::DumpRow> dump_rows(const replay::PerBuffer& buffer) {
  std::vector<replay::DumpRow> rows;
  for (std::size_t slot : buffer.slots_oldest_first()) rows.push_back(buffer.dump_row(slot));
  return rows;
}

double median(std::vector<double> v) { return metrics::percentile(std::move(v), 50.0); }

// ---------------------------------------------------------------------------------------------

Outcome gradient_exactness() {
  Rng rng(101);
  std::set<std::vector<nn::Activation>> mixes;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const auto net = test::random_mlp(rng, k % 2 == 1);
    mixes.insert(test::activations_of(net));
    const auto x = test::random_matrix(rng, 5, net.input_dim(), 1.5);
    const auto fd = test::finite_difference_check(net, x, rng);
    worst = std::max({worst, fd.max_param_rel_error, fd.max_input_rel_error});
  }
  return {worst < 1e-4, "max relative error " + fmt(worst) + " over 20 networks, " + std::to_string(mixes.size()) +
                            " activation mixes"};
}

Outcome integral_oracles() {
  Rng rng(202);
  std::uniform_real_distribution<double> u(0.0, 1.0), sig(0.05, 0.5);
  double worst_uniform = 0.0, worst_gmm = 0.0;
  for (int k = 0; k < 20; ++k) {
    const double x0 = 0.6 * u(rng), y0 = 0.6 * u(rng);
    const auto box = goals::Box::rect(x0, x0 + 0.1 + 0.3 * u(rng), y0, y0 + 0.1 + 0.3 * u(rng));
    const Vec g{box.lo[0] - 0.1 + (box.hi[0] - box.lo[0] + 0.2) * u(rng),
                box.lo[1] - 0.1 + (box.hi[1] - box.lo[1] + 0.2) * u(rng)};
    const double sigma = sig(rng);
    const goals::DensityFn density = [&](std::span<const double> x) {
      return box.contains(x) ? 1.0 / box.volume() : 0.0;
    };
    const double closed = goals::score_uniform(g, box, sigma);
    const double mc = goals::score_monte_carlo(g, density, sigma, 1000000, goals::UniformProposal{box}, rng);
    worst_uniform = std::max(worst_uniform, std::abs(closed - mc) / closed);
  }
  for (int k = 0; k < 20; ++k) {
    goals::GaussianMixture gmm;
    const int n = 1 + k % 3;
    for (int c = 0; c < n; ++c) {
      goals::GaussianComponent comp;
      comp.weight = 1.0 / n;
      comp.mean = {0.2 + 0.6 * u(rng), 0.2 + 0.6 * u(rng)};
      const double sx = 0.05 + 0.2 * u(rng), sy = 0.05 + 0.2 * u(rng), rho = -0.6 + 1.2 * u(rng);
      comp.cov.resize(2, 2);
      comp.cov << sx * sx, rho * sx * sy, rho * sx * sy, sy * sy;
      gmm.components.push_back(comp);
    }
    const Vec g{u(rng), u(rng)};
    const double sigma = sig(rng);
    const goals::DensityFn density = [&](std::span<const double> x) { return gmm.density(x); };
    const double closed = goals::score_gmm(g, gmm, sigma);
    const double mc = goals::score_monte_carlo(g, density, sigma, 1000000, goals::GaussianProposal{}, rng);
    worst_gmm = std::max(worst_gmm, std::abs(closed - mc) / closed);
  }
  return {worst_uniform < 0.02 && worst_gmm < 0.02,
          "max relative error uniform " + fmt(worst_uniform) + ", gmm " + fmt(worst_gmm)};
}

Outcome target_grid_contract() {
  const auto region = goals::Box::rect(0.55, 0.95, 0.05, 0.95);
  const goals::GridSpec grid;  // unit screen, 20 x 20
  const auto q = goals::build_target_grid(goals::GoalDistributionSpec{region}, 0.2, grid, 0.002);
  const double sum = q.sum();
  const double lowest = *std::min_element(q.values.begin(), q.values.end());
  const auto peak = static_cast<int>(std::max_element(q.values.begin(), q.values.end()) - q.values.begin());
  const Vec peak_at = grid.cell_center(peak / grid.cols, peak % grid.cols);
  // Peak strictly inside: its cell lies in the region and is not on the region's border ring.
  std::vector<std::pair<int, int>> inside;
  for (int i = 0; i < grid.rows; ++i) {
    for (int j = 0; j < grid.cols; ++j) {
      if (region.contains(grid.cell_center(i, j))) inside.emplace_back(i, j);
    }
  }
  int i_lo = grid.rows, i_hi = -1, j_lo = grid.cols, j_hi = -1;
  for (auto [i, j] : inside) {
    i_lo = std::min(i_lo, i), i_hi = std::max(i_hi, i), j_lo = std::min(j_lo, j), j_hi = std::max(j_hi, j);
  }
  const int pi = peak / grid.cols, pj = peak % grid.cols;
  const bool strictly_inside = region.contains(peak_at) && pi > i_lo && pi < i_hi && pj > j_lo && pj < j_hi;
  // Every border cell of the region scores below the region's centre cell.
  const double centre = q.at((i_lo + i_hi) / 2, (j_lo + j_hi) / 2);
  double border_max = 0.0;
  for (auto [i, j] : inside) {
    if (i == i_lo || i == i_hi || j == j_lo || j == j_hi) border_max = std::max(border_max, q.at(i, j));
  }
  const bool pass = std::abs(sum - 1.0) < 1e-9 && lowest >= 0.002 - 1e-15 && strictly_inside && border_max < centre;
  return {pass, "sum " + fmt(sum) + ", min " + fmt(lowest) + ", peak cell (" + std::to_string(pi) + "," +
                    std::to_string(pj) + "), border max " + fmt(border_max) + " < centre " + fmt(centre)};
}

Outcome filter_soundness() {
  std::size_t filtered_virtual = 0, filtered_misleading = 0;
  const std::vector<std::vector<std::string>> filtered_runs{
      {"env.name=bit-flip", "env.n_bits=8", "algo.variant=filtered-her", "run.epochs=4", "run.cycles=5"},
      {"env.name=hand", "algo.variant=filtered-her", "run.epochs=2", "run.cycles=5"},
      {"env.name=hand-wall", "algo.variant=filtered-her-ibs", "run.epochs=2", "run.cycles=5"},
      {"env.name=robot", "algo.variant=filtered-her-ibs", "run.epochs=2", "run.cycles=5"}};
  for (auto overrides : filtered_runs) {
    overrides.insert(overrides.end(), {"metrics.eval_episodes=5", "metrics.probe_episodes=2"});
    const auto cfg = config(overrides);
    const auto env = cfg.make_env();
    const auto run = ddpg::run_training(*env, cfg.algo.variant, cfg.training_setup());
    const auto rows = dump_rows(run.buffer);
    for (const auto& r : rows) filtered_virtual += r.is_virtual ? 1 : 0;
    filtered_misleading += metrics::count_misleading(rows, *env);
  }
  const auto her_cfg = config({"env.name=bit-flip", "env.n_bits=8", "algo.variant=her", "run.epochs=4",
                               "run.cycles=5", "metrics.eval_episodes=5", "metrics.probe_episodes=2"});
  const auto her_env = her_cfg.make_env();
  const auto her_run = ddpg::run_training(*her_env, her_cfg.algo.variant, her_cfg.training_setup());
  const std::size_t her_misleading = metrics::count_misleading(dump_rows(her_run.buffer), *her_env);
  return {filtered_virtual > 0 && filtered_misleading == 0 && her_misleading > 0,
          "filtered runs: " + std::to_string(filtered_misleading) + " of " + std::to_string(filtered_virtual) +
              " virtual transitions misleading; vanilla HER bit-flip: " + std::to_string(her_misleading)};
}

Outcome bias_reproduction() {
  const auto base =
      config({"env.name=bit-flip", "algo.variant=her", "env.n_bits=8", "run.epochs=15", "run.cycles=10"});
  std::vector<std::uint64_t> seeds(10);
  std::iota(seeds.begin(), seeds.end(), 0);
  const auto study = cli::run_bias_study(base, seeds, &std::cerr);
  const auto& s = study.summary;
  return {s.seeds_bias_her_gt_filtered >= 8 && s.seeds_success_filtered_ge_her >= 8,
          "bias HER > Filtered-HER in " + std::to_string(s.seeds_bias_her_gt_filtered) +
              "/10 seeds, Filtered-HER success >= HER in " + std::to_string(s.seeds_success_filtered_ge_her) +
              "/10 (median bias " + fmt(s.median_bias_her) + " vs " + fmt(s.median_bias_filtered) + ")"};
}

// Hand runs shared by the KL-ordering and learning-signal criteria.
struct HandStudy {
  std::map<her::Variant, std::vector<double>> kl, success;
};

const std::vector<std::string> kHandBudget{"env.name=hand", "run.epochs=200", "run.cycles=50", "run.episodes=2",
                                           "run.optimization_steps=40", "metrics.eval_episodes=100",
                                           "metrics.probe_episodes=10", "run.dump_buffer=false"};

const HandStudy& hand_study() {
  static const HandStudy study = [] {
    HandStudy h;
    for (auto variant : {her::Variant::her, her::Variant::filtered_her, her::Variant::filtered_her_ibs}) {
      for (std::uint64_t seed = 0; seed < 3; ++seed) {
        auto overrides = kHandBudget;
        overrides.push_back("algo.variant=" + std::string(her::to_string(variant)));
        overrides.push_back("run.seed=" + std::to_string(seed));
        const auto cfg = config(overrides);
        const auto env = cfg.make_env();
        const auto t0 = std::chrono::steady_clock::now();
        const auto run = ddpg::run_training(*env, variant, cfg.training_setup());
        const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
        const auto& last = run.curves.back();
        h.kl[variant].push_back(last.kl_to_target);
        h.success[variant].push_back(last.success_rate);
        std::cerr << "hand " << her::to_string(variant) << " seed " << seed << ": success " << last.success_rate
                  << " kl " << last.kl_to_target << " (" << minutes << " min)\n";
      }
    }
    return h;
  }();
  return study;
}

Outcome kl_ordering() {
  const auto& h = hand_study();
  const double vanilla = median(h.kl.at(her::Variant::her));
  const double filtered = median(h.kl.at(her::Variant::filtered_her));
  const double ibs = median(h.kl.at(her::Variant::filtered_her_ibs));
  return {ibs < filtered && ibs < vanilla,
          "median KL Filtered-HER-IBS " + fmt(ibs) + ", Filtered-HER " + fmt(filtered) + ", HER " + fmt(vanilla)};
}

Outcome learning_signal() {
  const auto& h = hand_study();
  const double vanilla = median(h.success.at(her::Variant::her));
  const double ibs = median(h.success.at(her::Variant::filtered_her_ibs));
  return {vanilla <= 0.2 && ibs >= vanilla + 0.2,
          "median final success Filtered-HER-IBS " + fmt(ibs) + ", HER " + fmt(vanilla)};
}

Outcome ibs_properties() {
  Rng rng(808);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 8), cnt(0, 30), nc(1, 16);
  const double floor = 0.002;
  int bad_prob = 0, bad_floor = 0;
  for (int trial = 0; trial < 10000; ++trial) {
    goals::GridSpec grid;
    grid.rows = dim(rng);
    grid.cols = dim(rng);
    const std::size_t cells = grid.cells();
    std::vector<double> q_star(cells);
    double s = 0.0;
    for (double& v : q_star) s += (v = u(rng) * u(rng));
    for (double& v : q_star) v /= s;
    std::vector<std::uint64_t> counts(cells);
    std::uint64_t total = 0;
    const bool empty = trial % 10 == 0;
    for (auto& c : counts) total += (c = empty ? 0 : static_cast<std::uint64_t>(cnt(rng)));
    her::IbsConfig cfg;
    cfg.grid = grid;
    cfg.weight_floor = floor;
    const auto ibs = her::IbsState::from_parts(cfg, goals::GridDistribution{grid, q_star}, counts);
    std::vector<Vec> cands(static_cast<std::size_t>(nc(rng)));
    for (auto& g : cands) g = {u(rng), u(rng)};
    const auto p = ibs.priorities(cands);
    const double psum = std::accumulate(p.begin(), p.end(), 0.0);
    if (std::abs(psum - 1.0) > 1e-12 || *std::min_element(p.begin(), p.end()) < 0.0) ++bad_prob;
    for (const auto& g : cands) {
      const std::size_t c = grid.bin(g);
      const double q = total == 0 ? 0.0 : static_cast<double>(counts[c]) / static_cast<double>(total);
      const double w = ibs.weight(g);
      // At or above target the clipped difference is zero and the floor is what remains.
      if (q >= q_star[c] && w != floor) ++bad_floor;
      if (q_star[c] - q > floor && w != q_star[c] - q) ++bad_floor;
    }
  }
  her::IbsConfig cfg;
  int bad_anneal = 0;
  for (std::int64_t c = 0; c <= 5000; ++c) {
    double expect = 2.0;
    for (std::int64_t k = 0; k < c / 50; ++k) expect *= 0.9;
    expect = std::max(expect, 0.2);
    if (std::abs(cfg.sigma_sq_at(c) - expect) > 1e-12) ++bad_anneal;
  }
  return {bad_prob == 0 && bad_floor == 0 && bad_anneal == 0,
          "10000 states: " + std::to_string(bad_prob) + " bad priority vectors, " + std::to_string(bad_floor) +
              " floor mismatches; " + std::to_string(bad_anneal) + " anneal mismatches"};
}

Outcome per_statistics() {
  Rng rng(909);
  const replay::TransitionSchema schema{1, 1, 1};
  const replay::PerConfig per;  // alpha 0.6
  replay::PerBuffer buf(20, schema, per);
  std::uniform_real_distribution<double> td(0.0, 4.0), unit(0.0, 1.0);
  std::vector<std::size_t> idx;
  std::vector<double> err;
  for (std::size_t i = 0; i < 20; ++i) {
    replay::Transition t;
    t.observation = {static_cast<double>(i)};
    t.goal = {0.0};
    t.action = {0.0};
    t.next_observation = {0.0};
    t.achieved_goal = {0.0};
    t.next_achieved_goal = {0.0};
    t.reward = -1.0;
    buf.store(t);
    idx.push_back(i);
    err.push_back(td(rng));
  }
  buf.update_priorities(idx, err);
  std::vector<double> expect(20);
  for (std::size_t i = 0; i < 20; ++i) expect[i] = std::pow(err[i] + per.priority_floor, per.alpha);
  const double total = std::accumulate(expect.begin(), expect.end(), 0.0);
  std::vector<double> freq(20, 0.0);
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) freq[buf.sample(1, 1.0, rng).indices[0]] += 1.0 / draws;
  double worst_freq = 0.0;
  for (std::size_t i = 0; i < 20; ++i) worst_freq = std::max(worst_freq, std::abs(freq[i] - expect[i] / total));

  const std::size_t cap = 61;
  replay::SumTree tree(cap);
  std::vector<double> naive(cap, 0.0);
  std::uniform_int_distribution<std::size_t> leaf(0, cap - 1);
  int mismatches = 0;
  for (int op = 0; op < 10000; ++op) {
    const std::size_t i = leaf(rng);
    const double v = op % 17 == 0 ? 0.0 : 5.0 * unit(rng);
    tree.set(i, v);
    naive[i] = v;
    const double sum = std::accumulate(naive.begin(), naive.end(), 0.0);
    if (std::abs(tree.total() - sum) > 1e-9 || std::abs(tree.get(i) - v) > 0.0) ++mismatches;
    if (sum > 0.0) {
      const double prefix = unit(rng) * sum;
      double run = 0.0;
      std::size_t want = 0;
      for (; want < cap; ++want) {
        if (naive[want] > 0.0 && prefix < run + naive[want]) break;
        run += naive[want];
      }
      if (tree.find_prefix(prefix) != want) ++mismatches;
    }
  }
  return {worst_freq <= 0.02 && mismatches == 0,
          "max |frequency - p^alpha share| " + fmt(worst_freq) + " at 1e5 draws; " + std::to_string(mismatches) +
              " sum-tree mismatches in 10000 operations"};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("ibsher_acceptance_" + std::to_string(::getpid()));
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> configs{
      {"env.name=bit-flip", "env.n_bits=6", "algo.variant=her", "run.seed=3"},
      {"env.name=hand", "algo.variant=filtered-her-ibs", "run.seed=4"},
      {"env.name=robot", "algo.variant=her-ibs", "run.seed=5"}};
  const auto read = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  int identical = 0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    std::string curves[2], dump[2];
    for (int rep = 0; rep < 2; ++rep) {
      cli::TrainOptions opt;
      opt.overrides = configs[k];
      opt.overrides.insert(opt.overrides.end(),
                           {"run.epochs=3", "run.cycles=4", "metrics.eval_episodes=5", "metrics.probe_episodes=3",
                            "run.output_dir=" + (root / (std::to_string(k) + "_" + std::to_string(rep))).string()});
      std::ostringstream log;
      const auto dir = cli::cmd_train(opt, log);
      curves[rep] = read(dir / "curves.csv");
      dump[rep] = read(dir / "buffer-dump.csv");
    }
    identical += !curves[0].empty() && !dump[0].empty() && curves[0] == curves[1] && dump[0] == dump[1];
  }
  fs::remove_all(root);
  return {identical == static_cast<int>(configs.size()),
          std::to_string(identical) + "/" + std::to_string(configs.size()) +
              " configs byte-identical in curves.csv and buffer-dump.csv"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"AC1", gradient_exactness}, {"AC2", integral_oracles}, {"AC3", target_grid_contract},
      {"AC4", filter_soundness},   {"AC5", bias_reproduction}, {"AC6", kl_ordering},
      {"AC7", learning_signal},    {"AC8", ibs_properties},   {"AC9", per_statistics},
      {"AC10", determinism}};
  const std::set<std::string> selected(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!selected.empty() && !selected.count(name)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += out.pass ? 0 : 1;
    std::cout << name << ' ' << (out.pass ? "PASS" : "FAIL") << "  " << out.detail << " [" << fmt(secs) << " s]"
              << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
