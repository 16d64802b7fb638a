#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "lts/curriculum.hpp"
#include "lts/detail/json_text.hpp"
#include "lts/error.hpp"
#include "lts/eval.hpp"
#include "lts/gnn.hpp"
#include "lts/hetero_graph.hpp"
#include "lts/optimizer.hpp"

namespace lts {

struct TrainConfig {
  std::optional<ScheduleConfig> schedule;  // nullopt = baseline, every epoch uses the full train split
  OptimizerConfig optimizer;
  std::int64_t max_epochs = 500;
  std::int64_t patience = 30;
  std::size_t hidden_dim = 32;
  std::size_t num_layers = 2;
  std::uint64_t seed = 0;
  bool record_time = false;  // fill the `ms` column; off keeps reports byte-reproducible
  // Start from a zero output head: every node then begins at loss ln(C), so
  // the first ranking is not decided by the random initial class preference.
  bool zero_head_init = true;

  void validate() const {
    optimizer.validate();
    if (max_epochs < 1) throw ConfigError("max_epochs: must be positive");
    if (patience < 1) throw ConfigError("patience: must be positive");
    if (hidden_dim == 0) throw ConfigError("hidden_dim: must be positive");
    if (num_layers == 0) throw ConfigError("num_layers: must be positive");
    if (schedule) {
      schedule->validate();
      if (max_epochs < schedule->T) throw ConfigError("max_epochs: must be >= T when a schedule is set");
    }
  }
};

struct EpochRow {
  std::int64_t epoch = 0;
  double lambda = 1.0;
  std::size_t selected = 0;
  double mean_loss = 0.0;
  double train_acc = 0.0;
  double val_acc = 0.0;
  double test_acc = 0.0;
  double ms = 0.0;
  std::optional<ExclusionPurity> purity;  // present when a NoiseRecord was supplied
};

struct TrainReport {
  std::vector<EpochRow> rows;
  std::int64_t best_val_epoch = -1;
  double best_val_acc = 0.0;
  double test_acc_at_best_val = 0.0;
  std::string stop_reason;  // "patience", "max_epochs" or "diverged"
};

class DivergenceError : public Error {
 public:
  DivergenceError(std::int64_t epoch, double learning_rate)
      : Error("training diverged at epoch " + std::to_string(epoch) + " (learning rate " +
              detail::format_double(learning_rate) + "): non-finite loss after the optimizer step"),
        epoch_(epoch),
        learning_rate_(learning_rate) {}

  std::int64_t epoch() const { return epoch_; }
  double learning_rate() const { return learning_rate_; }
  const TrainReport& partial_report() const { return partial_; }
  void attach(TrainReport report) { partial_ = std::move(report); }

 private:
  std::int64_t epoch_;
  double learning_rate_;
  TrainReport partial_;
};

// One loss-aware update on any model:
//   1. per-node losses over `train` with the current parameters,
//   2. easiest-first ranking,
//   3. keep the first max(1, floor(n * proportion)),
//   4. gradient of their mean and one optimizer step.
// `node_losses(params, train)` returns losses in `train` order;
// `mean_loss_gradient(params, selected)` returns a Params-shaped gradient.
template <class Params, class LossFn, class GradFn>
SelectionResult loss_aware_step(Params& params, OptimizerState& opt, const OptimizerConfig& cfg,
                                std::span<const NodeId> train, double proportion, LossFn&& node_losses,
                                GradFn&& mean_loss_gradient) {
  const std::vector<double> losses = node_losses(std::as_const(params), train);
  auto selection = select_nodes(losses, proportion, train);
  const Params grads = mean_loss_gradient(std::as_const(params), std::span<const NodeId>(selection.selected));
  optimizer_step(params, grads, opt, cfg);
  return selection;
}

// One epoch of the relational GCN under `state.proportion`. Accuracies are
// measured after the update.
inline EpochRow train_epoch(const HeteroGraph& g, RelationalModelParams& params, OptimizerState& opt,
                            const ScheduleState& state, const TrainConfig& cfg,
                            const NoiseRecord* noise = nullptr) {
  const auto start = std::chrono::steady_clock::now();
  const std::span<const NodeId> train(g.splits.train);
  if (train.empty()) throw ContractError("train_epoch: empty train split");

  ForwardTrace trace;
  const auto selection = loss_aware_step(
      params, opt, cfg.optimizer, train, state.proportion,
      [&](const RelationalModelParams& p, std::span<const NodeId> nodes) {
        trace = forward(g, p);
        return per_node_losses(trace.logits, g.labels, nodes);
      },
      [&](const RelationalModelParams& p, std::span<const NodeId> selected) {
        return backward(trace, selected, g, p);
      });

  const auto after = forward(g, params);
  const auto post_losses = per_node_losses(after.logits, g.labels, train);
  for (double l : post_losses)
    if (!std::isfinite(l)) throw DivergenceError(state.epoch, cfg.optimizer.learning_rate);
  if (!params.all_finite()) throw DivergenceError(state.epoch, cfg.optimizer.learning_rate);

  EpochRow row;
  row.epoch = state.epoch;
  row.lambda = state.proportion;
  row.selected = selection.selected.size();
  row.mean_loss = selection.mean_selected_loss;
  const auto pred = predict(after.logits);
  row.train_acc = accuracy_on(pred, g.labels, g.splits.train);
  row.val_acc = g.splits.val.empty() ? 0.0 : accuracy_on(pred, g.labels, g.splits.val);
  row.test_acc = g.splits.test.empty() ? 0.0 : accuracy_on(pred, g.labels, g.splits.test);
  if (noise) row.purity = exclusion_purity(selection, *noise, train.size());
  if (cfg.record_time)
    row.ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return row;
}

// Curriculum epochs t = 0..T, then the whole train split until validation
// accuracy has not improved for `patience` consecutive full-split epochs, or
// t = max_epochs. The patience counter only runs while the proportion is 1,
// so a lambda0 = 1 schedule behaves exactly like the baseline.
inline TrainReport run_training(const HeteroGraph& g, const TrainConfig& cfg, const NoiseRecord* noise = nullptr) {
  cfg.validate();
  validate(g);
  if (g.splits.train.empty()) throw ContractError("run_training: empty train split");
  if (g.splits.val.empty()) throw ContractError("run_training: early stopping needs a validation split");

  auto params = init_params(g, cfg.hidden_dim, cfg.num_layers, cfg.seed);
  if (cfg.zero_head_init) params.output_head.setZero();
  OptimizerState opt;
  ScheduleState state = cfg.schedule ? ScheduleState::initial(*cfg.schedule) : ScheduleState{0, 1.0, Phase::full_set};

  TrainReport report;
  std::int64_t stale = 0;
  for (std::int64_t t = 0; t <= cfg.max_epochs; ++t) {
    try {
      report.rows.push_back(train_epoch(g, params, opt, state, cfg, noise));
    } catch (DivergenceError& e) {
      report.stop_reason = "diverged";
      e.attach(std::move(report));
      throw;
    }
    const auto& row = report.rows.back();
    if (row.val_acc > report.best_val_acc || report.best_val_epoch < 0) {
      report.best_val_epoch = row.epoch;
      report.best_val_acc = row.val_acc;
      report.test_acc_at_best_val = row.test_acc;
      stale = 0;
    } else if (row.lambda == 1.0) {
      ++stale;
    }
    if (stale >= cfg.patience) {
      report.stop_reason = "patience";
      return report;
    }
    state = cfg.schedule ? advance(state, *cfg.schedule) : ScheduleState{t + 1, 1.0, Phase::full_set};
  }
  report.stop_reason = "max_epochs";
  return report;
}

// ---------------------------------------------------------------------------
// Report serialization

inline void write_report_csv(std::ostream& os, const TrainReport& report) {
  const bool with_purity = !report.rows.empty() && report.rows.front().purity.has_value();
  os << "epoch,lambda,selected,mean_loss,train_acc,val_acc,test_acc,ms";
  if (with_purity) os << ",excl_noisy_frac,global_noisy_frac";
  os << "\n";
  using detail::format_double;
  for (const auto& r : report.rows) {
    os << r.epoch << ',' << format_double(r.lambda) << ',' << r.selected << ',' << format_double(r.mean_loss) << ','
       << format_double(r.train_acc) << ',' << format_double(r.val_acc) << ',' << format_double(r.test_acc) << ','
       << format_double(r.ms);
    if (with_purity && r.purity)
      os << ',' << format_double(r.purity->excluded_noisy_fraction) << ','
         << format_double(r.purity->global_noisy_fraction);
    os << "\n";
  }
}

inline std::string report_csv(const TrainReport& report) {
  std::ostringstream os;
  write_report_csv(os, report);
  return os.str();
}

inline std::string report_summary_json(const TrainReport& report) {
  detail::json j;
  j["best_val_epoch"] = report.best_val_epoch;
  j["best_val_acc"] = report.best_val_acc;
  j["test_acc"] = report.test_acc_at_best_val;
  j["epochs_run"] = report.rows.size();
  j["stop_reason"] = report.stop_reason;
  return j.dump();
}

}  // namespace lts
