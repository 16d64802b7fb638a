#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "lts/error.hpp"
#include "lts/matrix.hpp"

namespace lts {

enum class OptimizerKind { sgd, adam };

inline std::string_view to_string(OptimizerKind k) { return k == OptimizerKind::sgd ? "sgd" : "adam"; }

inline OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adam") return OptimizerKind::adam;
  throw ConfigError("optimizer: unknown optimizer '" + std::string(name) + "' (expected sgd or adam)");
}

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::adam;
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const {
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) throw ConfigError("learning_rate: must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ConfigError("beta1: must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("beta2: must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("epsilon: must be positive");
  }
};

// Adam moments, one pair per parameter matrix in for_each order.
struct OptimizerState {
  std::int64_t step = 0;
  std::vector<Matrix> first_moment;
  std::vector<Matrix> second_moment;
};

// In-place update. `Params` exposes for_each(name, Matrix&) visiting its
// matrices in a fixed order; `grads` must have identical structure.
template <class Params>
void optimizer_step(Params& params, const Params& grads, OptimizerState& state, const OptimizerConfig& cfg) {
  std::vector<const Matrix*> g;
  grads.for_each([&g](const std::string&, const Matrix& m) { g.push_back(&m); });

  std::size_t i = 0;
  auto check = [&](const std::string& name, const Matrix& p) {
    if (i >= g.size() || g[i]->rows() != p.rows() || g[i]->cols() != p.cols())
      throw ShapeError("gradient for '" + name + "' does not match the parameter shape");
  };

  ++state.step;
  if (cfg.kind == OptimizerKind::sgd) {
    params.for_each([&](const std::string& name, Matrix& p) {
      check(name, p);
      p.noalias() -= cfg.learning_rate * *g[i++];
    });
    return;
  }

  if (state.first_moment.empty()) {
    params.for_each([&](const std::string&, Matrix& p) {
      state.first_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
      state.second_moment.push_back(Matrix::Zero(p.rows(), p.cols()));
    });
  }
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  params.for_each([&](const std::string& name, Matrix& p) {
    check(name, p);
    if (i >= state.first_moment.size()) throw ShapeError("optimizer state does not match the parameter set");
    auto& m = state.first_moment[i];
    auto& v = state.second_moment[i];
    const auto& grad = *g[i];
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
    p.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.epsilon);
    ++i;
  });
}

}  // namespace lts
