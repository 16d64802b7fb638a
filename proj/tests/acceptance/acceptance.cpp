// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// non-zero if any criterion fails.

#include <sys/wait.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../test_util.hpp"
#include "lts/lts.hpp"

#ifndef LTS_CLI_PATH
#error "LTS_CLI_PATH must point at the lts executable"
#endif

namespace fs = std::filesystem;
using namespace lts;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] %s: %s (%.1f s)\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

// ---------------------------------------------------------------------------
// Reference pacing formulas, written independently of the library.

double ref_linear(double l, double t, double T) { return std::min(1.0, l + (1 - l) * t / T); }
double ref_root(double l, double t, double T) { return std::min(1.0, std::sqrt(l * l + (1 - l * l) * t / T)); }
double ref_geom(double l, double t, double T) {
  return std::min(1.0, std::pow(2.0, std::log2(l) - std::log2(l) * t / T));
}

Outcome pacing_exactness() {
  const std::int64_t T = 100;
  double worst = 0.0;
  int checked = 0;
  for (double l : {0.1, 0.25, 0.5, 0.9}) {
    for (std::int64_t t : {std::int64_t{0}, T / 4, T / 2, 3 * T / 4, T, 2 * T}) {
      const std::pair<Scheduler, double> cases[] = {
          {Scheduler::linear, ref_linear(l, double(t), double(T))},
          {Scheduler::root, ref_root(l, double(t), double(T))},
          {Scheduler::geom, ref_geom(l, double(t), double(T))}};
      for (const auto& [s, ref] : cases) {
        const double v = pacing_value({l, T, s}, t);
        ++checked;
        if (t >= T && v != 1.0) return {false, std::string(to_string(s)) + " not exactly 1 at t = " + std::to_string(t)};
        if (t == 0 && v != l) return {false, std::string(to_string(s)) + " not exactly lambda0 at t = 0"};
        worst = std::max(worst, std::abs(v - ref));
      }
    }
  }
  return {worst <= 1e-12, std::to_string(checked) + " values, max |diff| = " + fmt("%.3g", worst)};
}

Outcome family_ordering() {
  const std::int64_t T = 100;
  for (double l : {0.1, 0.25, 0.5, 0.9})
    for (std::int64_t t : {T / 4, T / 2, 3 * T / 4}) {
      const double r = pacing_value({l, T, Scheduler::root}, t);
      const double li = pacing_value({l, T, Scheduler::linear}, t);
      const double g = pacing_value({l, T, Scheduler::geom}, t);
      if (!(r >= li && li >= g))
        return {false, "ordering violated at lambda0 = " + fmt("%g", l) + ", t = " + std::to_string(t)};
    }
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> lam(0.01, 1.0);
  std::uniform_int_distribution<std::int64_t> horizon(1, 500);
  for (int draw = 0; draw < 100; ++draw) {
    const double l = lam(rng);
    const auto T2 = horizon(rng);
    for (auto s : {Scheduler::linear, Scheduler::root, Scheduler::geom}) {
      double prev = 0.0;
      for (std::int64_t t = 0; t <= 2 * T2; ++t) {
        const double v = pacing_value({l, T2, s}, t);
        if (v < prev) return {false, "non-monotone " + std::string(to_string(s)) + " at t = " + std::to_string(t)};
        prev = v;
      }
    }
  }
  return {true, "12 interior grid points ordered; 100 random (lambda0, T) draws monotone for all families"};
}

// Exhaustive oracle: among all k-subsets whose largest value does not exceed
// the smallest excluded value, the one with the lexicographically smallest
// sorted index list.
std::vector<NodeId> oracle_k_smallest(const std::vector<double>& v, std::size_t k) {
  const std::size_t n = v.size();
  std::vector<NodeId> best;
  bool found = false;
  for (unsigned mask = 0; mask < (1u << n); ++mask) {
    if (static_cast<std::size_t>(__builtin_popcount(mask)) != k) continue;
    double in_max = -1e300, out_min = 1e300;
    std::vector<NodeId> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        in_max = std::max(in_max, v[i]);
        idx.push_back(static_cast<NodeId>(i));
      } else {
        out_min = std::min(out_min, v[i]);
      }
    }
    if (in_max > out_min) continue;
    if (!found || idx < best) best = idx;
    found = true;
  }
  return best;
}

Outcome selection_oracle() {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> len(1, 8), grid(0, 5);
  const double lambdas[] = {0.1, 0.3, 0.5, 0.9, 1.0};
  for (int c = 0; c < 10000; ++c) {
    std::vector<double> losses(static_cast<std::size_t>(len(rng)));
    for (auto& x : losses) x = grid(rng) / 10.0;
    std::vector<NodeId> prev;
    for (double lam : lambdas) {
      const auto r = select_nodes(losses, lam);
      const auto k = std::max<std::size_t>(1, static_cast<std::size_t>(std::floor(losses.size() * lam + 1e-9)));
      auto got = r.selected;
      std::sort(got.begin(), got.end());
      if (r.selected.size() != k || got != oracle_k_smallest(losses, k))
        return {false, "mismatch with the exhaustive oracle on case " + std::to_string(c)};
      double sum = 0.0;
      for (auto i : r.selected) sum += losses[i];
      if (std::abs(sum / double(k) - r.mean_selected_loss) > 1e-15) return {false, "mean mismatch on case " + std::to_string(c)};
      if (!std::equal(r.selected.begin(), r.selected.end(), r.sorted_indices.begin()))
        return {false, "selection is not a prefix of the ranking on case " + std::to_string(c)};
      if (!std::equal(prev.begin(), prev.end(), r.selected.begin()))
        return {false, "selection shrank or reordered as lambda grew on case " + std::to_string(c)};
      prev = r.selected;
    }
  }
  return {true, "10000 cases x 5 proportions agree with exhaustive enumeration; prefix and growth hold"};
}

Outcome gradient_oracle() {
  double worst = 0.0;
  std::size_t cases = 0, singles = 0, fulls = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = random_small_graph(1000 + seed, 20);
    const auto p = init_params(g, 4, 2, seed);
    const auto& train = g.splits.train;
    const auto losses = per_node_losses(forward(g, p).logits, g.labels, train);
    std::vector<std::vector<NodeId>> selections = {select_nodes(losses, 1e-9, train).selected,
                                                   select_nodes(losses, 0.5, train).selected, train};
    for (const auto& sel : selections) {
      const auto grads = backward(forward(g, p), sel, g, p);
      worst = std::max(worst, test::max_fd_error(g, p, grads, sel, 1e-5));
      ++cases;
      singles += sel.size() == 1;
      fulls += sel.size() == train.size();
    }
  }
  return {worst < 1e-4 && singles >= 20 && fulls >= 20,
          std::to_string(cases) + " selections on 20 graphs (" + std::to_string(singles) + " with |sel| = 1, " +
              std::to_string(fulls) + " with |sel| = n), max relative error = " + fmt("%.3g", worst)};
}

Outcome baseline_degeneracy() {
  auto spec = SyntheticSpec::paper_author(400, 2);
  spec.sigma = 5.0;
  const auto g = generate_synthetic(spec, 7);
  TrainConfig base;
  base.max_epochs = 49;  // epochs 0..49
  base.patience = 1000;
  base.seed = 3;
  auto one = base;
  one.schedule = ScheduleConfig{1.0, 10, Scheduler::linear};
  const auto a = run_training(g, base);
  const auto b = run_training(g, one);
  if (a.rows.size() != 50) return {false, "expected 50 epochs, got " + std::to_string(a.rows.size())};
  if (report_csv(a) != report_csv(b)) return {false, "reports differ"};

  auto pa = init_params(g, base.hidden_dim, base.num_layers, base.seed);
  pa.output_head.setZero();
  auto pb = pa;
  OptimizerState oa, ob;
  ScheduleState sa{0, 1.0, Phase::full_set};
  auto sb = ScheduleState::initial(*one.schedule);
  for (int t = 0; t < 50; ++t) {
    train_epoch(g, pa, oa, sa, base);
    train_epoch(g, pb, ob, sb, one);
    if (!(pa == pb)) return {false, "parameters differ after epoch " + std::to_string(t)};
    ++sa.epoch;
    sb = advance(sb, *one.schedule);
  }
  return {true, "50 epochs, byte-identical reports and bit-identical parameters every epoch"};
}

// ---------------------------------------------------------------------------
// Noisy-label experiment shared by the purity and end-to-end criteria.

constexpr std::size_t kTargetNodes = 400;
constexpr double kNoise = 0.3;
constexpr std::uint64_t kGraphSeed = 7;
constexpr int kClasses = 4;
constexpr std::size_t kFeatureDim = 16;
constexpr double kSigma = 3.0;
constexpr double kPIntra = 0.05;
constexpr double kPInter = 0.005;
constexpr OptimizerKind kOptimizer = OptimizerKind::sgd;
constexpr double kLearningRate = 2.0;

struct Experiment {
  HeteroGraph graph;
  NoiseRecord noise;
  TrainConfig config;
};

const Experiment& experiment() {
  static const Experiment e = [] {
    auto spec = SyntheticSpec::paper_author(kTargetNodes, kClasses, kFeatureDim);
    spec.sigma = kSigma;
    spec.p_intra = kPIntra;
    spec.p_inter = kPInter;
    auto [noisy, rec] = inject_label_noise(generate_synthetic(spec, kGraphSeed), kNoise, kGraphSeed + 1);
    TrainConfig cfg;
    cfg.schedule = ScheduleConfig{0.25, 100, Scheduler::linear};
    cfg.optimizer.kind = kOptimizer;
    cfg.optimizer.learning_rate = kLearningRate;
    return Experiment{std::move(noisy), std::move(rec), cfg};
  }();
  return e;
}

const CompareReport& compare_report() {
  static const CompareReport r = [] {
    const auto& e = experiment();
    std::vector<std::uint64_t> seeds;
    for (std::uint64_t s = 1; s <= 10; ++s) seeds.push_back(s);
    return run_compare(e.graph, e.config, seeds, &e.noise);
  }();
  return r;
}

Outcome exclusion_purity_mechanism() {
  const auto& r = compare_report();
  double sum = 0.0, global = 0.0;
  std::size_t count = 0;
  for (const auto& rep : r.lts.reports)
    for (const auto& row : rep.rows)
      if (row.epoch >= 20 && row.epoch <= 80 && row.purity) {
        sum += row.purity->excluded_noisy_fraction;
        global = row.purity->global_noisy_fraction;
        ++count;
      }
  if (count != 10 * 61) return {false, "expected 610 epoch rows, found " + std::to_string(count)};
  const double mean = sum / double(count);
  return {mean >= global + 0.05,
          "mean excluded noisy fraction over epochs 20-80 and 10 seeds = " + fmt("%.4f", mean) +
              " (global " + fmt("%.2f", global) + ", needs >= " + fmt("%.2f", global + 0.05) + ")"};
}

Outcome end_to_end() {
  const auto& r = compare_report();
  const auto base = mean_std(r.baseline.test_acc).mean;
  const auto curr = mean_std(r.lts.test_acc).mean;
  const auto wins = std::count_if(r.deltas.begin(), r.deltas.end(), [](double d) { return d > 0.0; });
  std::printf("%s", format_compare(r).c_str());
  return {curr >= base - 0.01 && wins >= 6, "baseline " + fmt("%.4f", base) + ", LTS " + fmt("%.4f", curr) +
                                                ", positive deltas " + std::to_string(wins) + "/10"};
}

// ---------------------------------------------------------------------------

int run_cli(const std::string& args) {
  const int status = std::system((std::string(LTS_CLI_PATH) + " " + args + " > /dev/null 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome determinism_and_format() {
  const auto dir = fs::temp_directory_path() / "lts_acceptance";
  fs::remove_all(dir);
  fs::create_directories(dir);
  const auto g = (dir / "g.json").string();
  if (run_cli("generate --target-nodes 400 --classes 2 --seed 7 --noise 0.3 -o " + g) != 0)
    return {false, "generate failed"};
  const auto g2 = (dir / "g2.json").string();
  if (run_cli("generate --target-nodes 400 --classes 2 --seed 7 --noise 0.3 -o " + g2) != 0)
    return {false, "second generate failed"};
  if (slurp(g) != slurp(g2)) return {false, "generate is not byte-reproducible"};

  const auto graph = load_graph(g);
  const auto round = (dir / "round.json").string();
  save_graph(graph, round);
  if (!(load_graph(round) == graph) || slurp(round) != slurp(g)) return {false, "graph file does not round-trip"};

  const std::string args = g + " --noise-record " + (dir / "g.noise.json").string() +
                           " --scheduler linear --lambda0 0.25 --T 100 --seed 5 -o ";
  for (const char* run : {"a", "b"})
    if (run_cli("train " + args + (dir / run).string()) != 0) return {false, "train failed"};
  const auto a = slurp(dir / "a" / "metrics.csv");
  if (a.empty() || a != slurp(dir / "b" / "metrics.csv")) return {false, "metrics.csv differs between runs"};
  if (slurp(dir / "a" / "summary.json") != slurp(dir / "b" / "summary.json")) return {false, "summary.json differs"};
  fs::remove_all(dir);
  return {true, "generate and train byte-identical across runs; graph save/load/save is exact"};
}

}  // namespace

int main() {
  report("Pacing exactness", pacing_exactness);
  report("Family ordering and monotonicity", family_ordering);
  report("Selection oracle", selection_oracle);
  report("Gradient oracle", gradient_oracle);
  report("Baseline degeneracy", baseline_degeneracy);
  report("Exclusion-purity mechanism", exclusion_purity_mechanism);
  report("End-to-end benefit", end_to_end);
  report("Determinism and format", determinism_and_format);
  std::printf("%d of 8 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
