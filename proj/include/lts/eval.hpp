#pragma once

#include <span>
#include <vector>

#include "lts/curriculum.hpp"
#include "lts/error.hpp"
#include "lts/hetero_graph.hpp"
#include "lts/matrix.hpp"

namespace lts {

// Correct predictions over total predictions.
inline double accuracy(std::span<const int> predictions, std::span<const int> labels) {
  if (predictions.size() != labels.size())
    throw ContractError("accuracy: " + std::to_string(predictions.size()) + " predictions for " +
                        std::to_string(labels.size()) + " labels");
  if (predictions.empty()) throw ContractError("accuracy: no predictions");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < labels.size(); ++i) hits += predictions[i] == labels[i];
  return static_cast<double>(hits) / static_cast<double>(labels.size());
}

// Argmax per row; ties go to the lowest class id.
inline std::vector<int> predict(const Matrix& logits) {
  std::vector<int> out(static_cast<std::size_t>(logits.rows()));
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < logits.cols(); ++c)
      if (logits(i, c) > logits(i, best)) best = c;
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

inline double accuracy_on(std::span<const int> predictions, std::span<const int> labels,
                          std::span<const NodeId> nodes) {
  std::vector<int> p, y;
  p.reserve(nodes.size());
  y.reserve(nodes.size());
  for (auto v : nodes) {
    if (v >= predictions.size() || v >= labels.size()) throw IndexError("accuracy: node index out of range");
    p.push_back(predictions[v]);
    y.push_back(labels[v]);
  }
  return accuracy(p, y);
}

struct ExclusionPurity {
  double excluded_noisy_fraction = 0.0;  // |flipped ∩ excluded| / |excluded|, 0 if nothing excluded
  double global_noisy_fraction = 0.0;    // |flipped| / train_size
};

// `selection` must carry node ids of the same split the noise was injected into.
inline ExclusionPurity exclusion_purity(const SelectionResult& selection, const NoiseRecord& noise,
                                        std::size_t train_size) {
  if (train_size == 0) throw ContractError("exclusion_purity: empty train split");
  ExclusionPurity out;
  out.global_noisy_fraction = static_cast<double>(noise.flipped.size()) / static_cast<double>(train_size);
  const auto excluded = selection.excluded();
  if (excluded.empty()) return out;
  std::size_t noisy = 0;
  for (auto v : excluded) noisy += noise.contains(v);
  out.excluded_noisy_fraction = static_cast<double>(noisy) / static_cast<double>(excluded.size());
  return out;
}

}  // namespace lts
