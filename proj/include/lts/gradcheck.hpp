#pragma once

// Central finite differences over every parameter of the relational GCN.
// The numeric side only calls forward(); it never touches backward().

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lts/gnn.hpp"

namespace lts {

// |a - n| / max(|a|, |n|, floor). The floor keeps entries whose true
// gradient is ~0 from turning rounding noise into huge relative errors.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

inline double selected_mean_loss(const HeteroGraph& g, const RelationalModelParams& p,
                                 std::span<const NodeId> selected) {
  const auto trace = forward(g, p);
  const auto losses = per_node_losses(trace.logits, g.labels, selected);
  double sum = 0.0;
  for (double l : losses) sum += l;
  return sum / static_cast<double>(losses.size());
}

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Eigen::Index worst_entry = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
  std::size_t entries_checked = 0;
};

using GradientFn = std::function<RelationalModelParams(const HeteroGraph&, const RelationalModelParams&,
                                                       std::span<const NodeId>)>;

inline RelationalModelParams analytic_gradient(const HeteroGraph& g, const RelationalModelParams& p,
                                               std::span<const NodeId> selected) {
  return backward(forward(g, p), selected, g, p);
}

inline GradCheckResult check_gradients(const HeteroGraph& g, const RelationalModelParams& params,
                                       std::span<const NodeId> selected, double step = 1e-5,
                                       const GradientFn& gradient = analytic_gradient) {
  const auto grads = gradient(g, params, selected);
  std::vector<const Matrix*> analytic;
  grads.for_each([&analytic](const std::string&, const Matrix& m) { analytic.push_back(&m); });

  GradCheckResult res;
  RelationalModelParams probe = params;
  std::size_t idx = 0;
  std::vector<std::pair<std::string, Matrix*>> slots;
  probe.for_each([&slots](const std::string& name, Matrix& m) { slots.emplace_back(name, &m); });
  for (auto& [name, m] : slots) {
    const auto& a = *analytic.at(idx++);
    for (Eigen::Index k = 0; k < m->size(); ++k) {
      const double saved = m->data()[k];
      m->data()[k] = saved + step;
      const double up = selected_mean_loss(g, probe, selected);
      m->data()[k] = saved - step;
      const double down = selected_mean_loss(g, probe, selected);
      m->data()[k] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double err = relative_error(a.data()[k], numeric);
      ++res.entries_checked;
      if (err > res.max_relative_error || res.entries_checked == 1) {
        res.max_relative_error = err;
        res.worst_parameter = name;
        res.worst_entry = k;
        res.worst_analytic = a.data()[k];
        res.worst_numeric = numeric;
      }
    }
  }
  return res;
}

// Small random heterogeneous graph for gradient checks: a featured target
// type and a featureless auxiliary type, with `target -> target` and
// `aux -> target` relations. At most `max_nodes` nodes in total.
inline HeteroGraph random_small_graph(std::uint64_t seed, std::size_t max_nodes = 20, std::size_t feature_dim = 3,
                                      int num_classes = 3) {
  std::mt19937_64 rng(seed);
  const std::size_t n_target = std::uniform_int_distribution<std::size_t>(3, std::max<std::size_t>(3, max_nodes - 2))(rng);
  const std::size_t n_aux = std::uniform_int_distribution<std::size_t>(1, std::max<std::size_t>(1, max_nodes - n_target))(rng);

  HeteroGraph g;
  g.node_types = {{"item", n_target}, {"tag", n_aux}};
  g.target_type = 0;
  g.num_classes = num_classes;
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(static_cast<Eigen::Index>(n_target), static_cast<Eigen::Index>(feature_dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
  g.features = {std::move(x), std::nullopt};
  g.relations = {{"links", 0, 0}, {"tags", 1, 0}};
  g.edges.resize(2);
  std::bernoulli_distribution coin(0.3);
  for (NodeId u = 0; u < n_target; ++u)
    for (NodeId v = 0; v < n_target; ++v)
      if (u != v && coin(rng)) g.edges[0].push_back({u, v});
  for (NodeId u = 0; u < n_aux; ++u)
    for (NodeId v = 0; v < n_target; ++v)
      if (coin(rng)) g.edges[1].push_back({u, v});
  std::uniform_int_distribution<int> cls(0, num_classes - 1);
  for (std::size_t i = 0; i < n_target; ++i) g.labels.push_back(cls(rng));
  for (NodeId v = 0; v < n_target; ++v) g.splits.train.push_back(v);
  validate(g);
  return g;
}

}  // namespace lts
