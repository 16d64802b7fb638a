#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "lts/trainer.hpp"

namespace lts {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
};

inline MeanStd mean_std(std::span<const double> xs) {
  if (xs.empty()) return {};
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / static_cast<double>(xs.size());
  double sq = 0.0;
  for (double x : xs) sq += (x - mean) * (x - mean);
  return {mean, std::sqrt(sq / static_cast<double>(xs.size()))};
}

struct ArmResult {
  std::vector<TrainReport> reports;  // one per seed
  std::vector<double> val_acc;       // best validation accuracy per seed
  std::vector<double> test_acc;      // test accuracy at the best-validation epoch
};

struct CompareReport {
  std::vector<std::uint64_t> seeds;
  ArmResult baseline;
  ArmResult lts;
  std::vector<double> deltas;  // lts - baseline test accuracy per seed
  std::vector<std::string> warnings;
};

// Trains the baseline (no schedule) and `config` for every seed. Runs are
// independent and may execute on up to `threads` workers; results are
// collected in seed order.
inline CompareReport run_compare(const HeteroGraph& g, const TrainConfig& config, std::span<const std::uint64_t> seeds,
                                 const NoiseRecord* noise = nullptr, unsigned threads = 0) {
  if (seeds.empty()) throw ConfigError("seeds: at least one seed is required");
  CompareReport out;
  out.seeds.assign(seeds.begin(), seeds.end());
  if (seeds.size() < 2) out.warnings.push_back("fewer than 2 seeds: standard deviation reported as 0");

  const auto n = seeds.size();
  std::vector<TrainReport> base(n), curr(n);
  std::vector<std::exception_ptr> errors(2 * n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t job; (job = next.fetch_add(1)) < 2 * n;) {
      const auto s = job / 2;
      TrainConfig cfg = config;
      cfg.seed = seeds[s];
      if (job % 2 == 0) cfg.schedule.reset();
      try {
        (job % 2 == 0 ? base : curr)[s] = run_training(g, cfg, noise);
      } catch (...) {
        errors[job] = std::current_exception();
      }
    }
  };
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, 2 * n));
  std::vector<std::thread> pool;
  for (unsigned i = 1; i < threads; ++i) pool.emplace_back(worker);
  worker();
  for (auto& th : pool) th.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  for (std::size_t s = 0; s < n; ++s) {
    out.baseline.val_acc.push_back(base[s].best_val_acc);
    out.baseline.test_acc.push_back(base[s].test_acc_at_best_val);
    out.lts.val_acc.push_back(curr[s].best_val_acc);
    out.lts.test_acc.push_back(curr[s].test_acc_at_best_val);
    out.deltas.push_back(curr[s].test_acc_at_best_val - base[s].test_acc_at_best_val);
  }
  out.baseline.reports = std::move(base);
  out.lts.reports = std::move(curr);
  return out;
}

namespace detail {
inline std::string pm(const MeanStd& m) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f ± %.4f", m.mean, m.std);
  return buf;
}
}  // namespace detail

// Methods | Valid. | Test rows (mean ± population std), then per-seed deltas.
inline std::string format_compare(const CompareReport& r, const std::string& model_name = "RGCN") {
  std::ostringstream os;
  char line[160];
  std::snprintf(line, sizeof line, "%-16s | %-17s | %-17s\n", "Methods", "Valid.", "Test");
  os << line << std::string(56, '-') << "\n";
  const auto row = [&](const std::string& name, const ArmResult& a) {
    std::snprintf(line, sizeof line, "%-16s | %-17s | %-17s\n", name.c_str(), detail::pm(mean_std(a.val_acc)).c_str(),
                  detail::pm(mean_std(a.test_acc)).c_str());
    os << line;
  };
  row(model_name, r.baseline);
  row(model_name + " (w/ LTS)", r.lts);
  os << "\n";
  std::snprintf(line, sizeof line, "%-8s %-10s %-10s %-10s\n", "seed", "baseline", "lts", "delta");
  os << line;
  for (std::size_t s = 0; s < r.seeds.size(); ++s) {
    std::snprintf(line, sizeof line, "%-8llu %-10.4f %-10.4f %+.4f\n", static_cast<unsigned long long>(r.seeds[s]),
                  r.baseline.test_acc[s], r.lts.test_acc[s], r.deltas[s]);
    os << line;
  }
  const auto wins = std::count_if(r.deltas.begin(), r.deltas.end(), [](double d) { return d > 0.0; });
  os << "positive deltas: " << wins << "/" << r.deltas.size() << "\n";
  for (const auto& w : r.warnings) os << "warning: " << w << "\n";
  return os.str();
}

inline std::string compare_json(const CompareReport& r) {
  detail::json j;
  j["seeds"] = r.seeds;
  const auto arm = [](const ArmResult& a) {
    const auto v = mean_std(a.val_acc), t = mean_std(a.test_acc);
    return detail::json{{"val_acc", a.val_acc}, {"test_acc", a.test_acc}, {"val_mean", v.mean}, {"val_std", v.std},
                        {"test_mean", t.mean}, {"test_std", t.std}};
  };
  j["baseline"] = arm(r.baseline);
  j["lts"] = arm(r.lts);
  j["deltas"] = r.deltas;
  j["warnings"] = r.warnings;
  return j.dump(2);
}

}  // namespace lts
