#pragma once

// Loss-aware training schedule: pacing functions that map an epoch to the
// proportion of easiest training nodes in use, and the easiest-first
// selection over per-node losses.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lts/error.hpp"
#include "lts/hetero_graph.hpp"

namespace lts {

enum class Scheduler { linear, root, geom };

inline std::string_view to_string(Scheduler s) {
  switch (s) {
    case Scheduler::linear: return "linear";
    case Scheduler::root: return "root";
    case Scheduler::geom: return "geom";
  }
  return "?";
}

inline Scheduler parse_scheduler(std::string_view name) {
  if (name == "linear") return Scheduler::linear;
  if (name == "root") return Scheduler::root;
  if (name == "geom") return Scheduler::geom;
  throw ConfigError("scheduler: unknown pacing function '" + std::string(name) + "' (expected linear, root or geom)");
}

struct ScheduleConfig {
  double lambda0 = 1.0;  // initial proportion, in (0, 1]
  std::int64_t T = 1;    // first epoch at which the proportion reaches 1
  Scheduler scheduler = Scheduler::linear;

  void validate() const {
    if (!(lambda0 > 0.0 && lambda0 <= 1.0)) throw ConfigError("lambda0: must lie in (0, 1]");
    if (T < 1) throw ConfigError("T: must be at least 1");
  }
};

// lambda_t for epoch t. Exactly lambda0 at t = 0 and exactly 1 for t >= T.
inline double pacing_value(const ScheduleConfig& cfg, std::int64_t t) {
  cfg.validate();
  if (t < 0) throw ContractError("pacing_value: epoch must be >= 0");
  if (t >= cfg.T) return 1.0;
  const double lam = cfg.lambda0;
  const double frac = static_cast<double>(t) / static_cast<double>(cfg.T);
  switch (cfg.scheduler) {
    case Scheduler::linear: return std::min(1.0, lam + (1.0 - lam) * frac);
    case Scheduler::root: return std::min(1.0, std::sqrt(lam * lam + (1.0 - lam * lam) * frac));
    case Scheduler::geom: {
      const double l2 = std::log2(lam);
      return std::min(1.0, std::exp2(l2 - l2 * frac));
    }
  }
  throw ConfigError("scheduler: invalid value");
}

enum class Phase { curriculum, full_set };

struct ScheduleState {
  std::int64_t epoch = 0;
  double proportion = 1.0;
  Phase phase = Phase::curriculum;

  static ScheduleState initial(const ScheduleConfig& cfg) {
    return {0, pacing_value(cfg, 0), Phase::curriculum};
  }
};

// Moves to the next epoch. The full-set phase starts at the first t > T and
// is absorbing.
inline ScheduleState advance(const ScheduleState& state, const ScheduleConfig& cfg) {
  ScheduleState next = state;
  ++next.epoch;
  if (next.phase == Phase::full_set || next.epoch > cfg.T) {
    next.phase = Phase::full_set;
    next.proportion = 1.0;
  } else {
    next.proportion = pacing_value(cfg, next.epoch);
  }
  return next;
}

// Number of nodes kept: max(1, floor(n * proportion)).
inline std::size_t selection_size(std::size_t n, double proportion) {
  return std::clamp<std::size_t>(proportional_count(n, proportion), 1, n);
}

struct SelectionResult {
  std::vector<NodeId> sorted_indices;  // ascending loss, ties by position
  std::vector<NodeId> selected;        // prefix of sorted_indices
  double mean_selected_loss = 0.0;

  std::span<const NodeId> excluded() const {
    return std::span<const NodeId>(sorted_indices).subspan(selected.size());
  }
};

// Ranks `losses` easiest-first and keeps the first max(1, floor(n * proportion)).
// Indices in the result are positions in `losses`.
inline SelectionResult select_nodes(std::span<const double> losses, double proportion) {
  if (losses.empty()) throw ContractError("select_nodes: empty loss vector");
  if (!(proportion > 0.0 && proportion <= 1.0)) throw ContractError("select_nodes: proportion must lie in (0, 1]");
  for (std::size_t i = 0; i < losses.size(); ++i)
    if (!std::isfinite(losses[i])) throw DataError("select_nodes: non-finite loss at node " + std::to_string(i));

  SelectionResult res;
  res.sorted_indices.resize(losses.size());
  std::iota(res.sorted_indices.begin(), res.sorted_indices.end(), NodeId{0});
  std::stable_sort(res.sorted_indices.begin(), res.sorted_indices.end(),
                   [&losses](NodeId a, NodeId b) { return losses[a] < losses[b]; });

  const auto k = selection_size(losses.size(), proportion);
  res.selected.assign(res.sorted_indices.begin(), res.sorted_indices.begin() + static_cast<std::ptrdiff_t>(k));
  double sum = 0.0;
  for (auto i : res.selected) sum += losses[i];
  res.mean_selected_loss = sum / static_cast<double>(k);
  return res;
}

// Same selection, with positions mapped back to node ids (e.g. the train split).
inline SelectionResult select_nodes(std::span<const double> losses, double proportion, std::span<const NodeId> ids) {
  if (ids.size() != losses.size()) throw ContractError("select_nodes: ids and losses differ in length");
  auto res = select_nodes(losses, proportion);
  for (auto& i : res.sorted_indices) i = ids[i];
  for (auto& i : res.selected) i = ids[i];
  return res;
}

}  // namespace lts
