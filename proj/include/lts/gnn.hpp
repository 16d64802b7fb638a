#pragma once

// Relational graph convolution with mean aggregation and hand-written
// reverse-mode gradients.
//
// Layer rule (row-vector convention, one row per node), for every node type:
//
//   Z = H_self * W_self + sum_r  mean_{u -> v in r}(H_src[u]) * W_r
//   H' = relu(Z)
//
// Relations only contribute to their destination type; a node with no
// incoming edges of relation r gets a zero contribution from r. After the
// last layer the target-type rows go through a linear head to produce logits.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "lts/error.hpp"
#include "lts/hetero_graph.hpp"
#include "lts/matrix.hpp"

namespace lts {

struct ModelDims {
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;
  std::size_t num_layers = 0;
  std::size_t num_classes = 0;

  // Input width is the shared feature width, or hidden_dim when every type
  // is featureless (embeddings are then hidden_dim wide).
  static ModelDims from_graph(const HeteroGraph& g, std::size_t hidden_dim, std::size_t num_layers) {
    return {g.feature_dim().value_or(hidden_dim), hidden_dim, num_layers, static_cast<std::size_t>(g.num_classes)};
  }
};

// Names and sizes the parameter set depends on.
struct ParamLayout {
  std::vector<std::string> type_names;
  std::vector<std::size_t> type_counts;
  std::vector<bool> featureless;
  std::vector<std::string> relation_names;

  static ParamLayout from_graph(const HeteroGraph& g) {
    ParamLayout p;
    for (std::size_t t = 0; t < g.node_types.size(); ++t) {
      p.type_names.push_back(g.node_types[t].name);
      p.type_counts.push_back(g.node_types[t].count);
      p.featureless.push_back(!g.features[t].has_value());
    }
    for (const auto& r : g.relations) p.relation_names.push_back(r.name);
    return p;
  }
};

struct RelationalModelParams {
  std::vector<std::vector<Matrix>> relation_weights;  // [layer][relation], d_in x d_out
  std::vector<Matrix> self_weights;                   // [layer], d_in x d_out
  std::vector<std::optional<Matrix>> type_embeddings; // [node type]; set only for featureless types
  Matrix output_head;                                 // hidden x num_classes
  std::vector<std::string> type_names;
  std::vector<std::string> relation_names;

  std::size_t num_layers() const { return self_weights.size(); }

  // Visits every matrix in a fixed order with its checkpoint name.
  template <class F>
  void for_each(F&& f) {
    for (std::size_t l = 0; l < self_weights.size(); ++l) {
      const auto prefix = "layer" + std::to_string(l);
      f(prefix + ".self", self_weights[l]);
      for (std::size_t r = 0; r < relation_weights[l].size(); ++r)
        f(prefix + ".rel." + relation_names[r], relation_weights[l][r]);
    }
    for (std::size_t t = 0; t < type_embeddings.size(); ++t)
      if (type_embeddings[t]) f("embed." + type_names[t], *type_embeddings[t]);
    f(std::string("head"), output_head);
  }

  template <class F>
  void for_each(F&& f) const {
    const_cast<RelationalModelParams*>(this)->for_each(
        [&f](const std::string& name, const Matrix& m) { f(name, m); });
  }

  std::size_t size() const {
    std::size_t n = 0;
    for_each([&n](const std::string&, const Matrix& m) { n += static_cast<std::size_t>(m.size()); });
    return n;
  }

  RelationalModelParams zeros_like() const {
    RelationalModelParams z = *this;
    z.for_each([](const std::string&, Matrix& m) { m.setZero(); });
    return z;
  }

  bool all_finite() const {
    bool ok = true;
    for_each([&ok](const std::string&, const Matrix& m) { ok = ok && m.allFinite(); });
    return ok;
  }

  bool operator==(const RelationalModelParams& o) const {
    if (type_names != o.type_names || relation_names != o.relation_names) return false;
    std::vector<const Matrix*> mine, theirs;
    for_each([&](const std::string&, const Matrix& m) { mine.push_back(&m); });
    o.for_each([&](const std::string&, const Matrix& m) { theirs.push_back(&m); });
    if (mine.size() != theirs.size()) return false;
    for (std::size_t i = 0; i < mine.size(); ++i) {
      if (mine[i]->rows() != theirs[i]->rows() || mine[i]->cols() != theirs[i]->cols()) return false;
      if (*mine[i] != *theirs[i]) return false;
    }
    return true;
  }
};

inline std::uint64_t fingerprint(const RelationalModelParams& p) {
  Fingerprint fp;
  p.for_each([&fp](const std::string&, const Matrix& m) { fp.mix(m); });
  return fp.value();
}

// Glorot-uniform: every matrix drawn from U[-a, a], a = sqrt(6 / (rows + cols)).
inline double glorot_bound(std::size_t rows, std::size_t cols) {
  return std::sqrt(6.0 / static_cast<double>(rows + cols));
}

inline RelationalModelParams init_params(const ModelDims& dims, const ParamLayout& layout, std::uint64_t seed) {
  if (dims.input_dim == 0) throw ConfigError("input_dim must be positive");
  if (dims.hidden_dim == 0) throw ConfigError("hidden_dim must be positive");
  if (dims.num_layers == 0) throw ConfigError("num_layers must be positive");
  if (dims.num_classes == 0) throw ConfigError("num_classes must be positive");

  std::mt19937_64 rng(seed);
  auto draw = [&rng](std::size_t rows, std::size_t cols) {
    if (rows == 0 || cols == 0) throw ConfigError("parameter matrix with a zero dimension");
    std::uniform_real_distribution<double> u(-glorot_bound(rows, cols), glorot_bound(rows, cols));
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = u(rng);
    return m;
  };

  RelationalModelParams p;
  p.type_names = layout.type_names;
  p.relation_names = layout.relation_names;
  for (std::size_t l = 0; l < dims.num_layers; ++l) {
    const auto d_in = l == 0 ? dims.input_dim : dims.hidden_dim;
    p.self_weights.push_back(draw(d_in, dims.hidden_dim));
    std::vector<Matrix> rel;
    for (std::size_t r = 0; r < layout.relation_names.size(); ++r) rel.push_back(draw(d_in, dims.hidden_dim));
    p.relation_weights.push_back(std::move(rel));
  }
  p.type_embeddings.resize(layout.type_names.size());
  for (std::size_t t = 0; t < layout.type_names.size(); ++t)
    if (layout.featureless[t]) p.type_embeddings[t] = draw(layout.type_counts[t], dims.input_dim);
  p.output_head = draw(dims.hidden_dim, dims.num_classes);
  return p;
}

inline RelationalModelParams init_params(const HeteroGraph& g, std::size_t hidden_dim, std::size_t num_layers,
                                         std::uint64_t seed) {
  return init_params(ModelDims::from_graph(g, hidden_dim, num_layers), ParamLayout::from_graph(g), seed);
}

// ---------------------------------------------------------------------------
// Forward

struct LayerCache {
  std::vector<Matrix> input;       // [node type] H^l
  std::vector<Matrix> aggregated;  // [relation] mean of source rows per destination node
  std::vector<Matrix> preact;      // [node type] Z^l
};

// Everything backward needs, tied to the (graph, params) pair that made it.
struct ForwardTrace {
  std::vector<LayerCache> layers;
  Matrix final_target;  // H^L restricted to the target type
  Matrix logits;        // |target| x num_classes
  std::uint64_t graph_fingerprint = 0;
  std::uint64_t params_fingerprint = 0;
};

namespace detail {

inline std::vector<double> inverse_in_degree(const std::vector<Edge>& edges, std::size_t n_dst) {
  std::vector<double> inv(n_dst, 0.0);
  for (const auto& e : edges) inv[e.dst] += 1.0;
  for (auto& d : inv) d = d > 0.0 ? 1.0 / d : 0.0;
  return inv;
}

// out[v] = mean over edges (u -> v) of h[u]; zero row when v has no in-edges.
inline Matrix mean_gather(const std::vector<Edge>& edges, const Matrix& h, std::size_t n_dst) {
  const auto inv = inverse_in_degree(edges, n_dst);
  Matrix out = Matrix::Zero(static_cast<Eigen::Index>(n_dst), h.cols());
  for (const auto& e : edges) out.row(e.dst) += inv[e.dst] * h.row(e.src);
  return out;
}

// Adjoint of mean_gather.
inline void mean_scatter_add(const std::vector<Edge>& edges, const Matrix& grad_dst, Matrix& grad_src) {
  const auto inv = inverse_in_degree(edges, static_cast<std::size_t>(grad_dst.rows()));
  for (const auto& e : edges) grad_src.row(e.src) += inv[e.dst] * grad_dst.row(e.dst);
}

inline void check_shapes(const HeteroGraph& g, const RelationalModelParams& p) {
  const auto layers = p.num_layers();
  if (layers == 0) throw ShapeError("model has no layers");
  if (p.relation_weights.size() != layers) throw ShapeError("relation weights do not cover every layer");
  if (p.type_embeddings.size() != g.node_types.size())
    throw ShapeError("type embeddings expected for " + std::to_string(g.node_types.size()) + " node types");
  const auto input_dim = p.self_weights[0].rows();
  const auto hidden = p.self_weights[0].cols();
  for (std::size_t t = 0; t < g.node_types.size(); ++t) {
    const auto& name = g.node_types[t].name;
    const auto rows = static_cast<Eigen::Index>(g.node_types[t].count);
    if (g.features[t]) {
      if (g.features[t]->cols() != input_dim)
        throw ShapeError("layer 0: features of type '" + name + "' have width " + std::to_string(g.features[t]->cols()) +
                         ", self weight expects " + std::to_string(input_dim));
    } else {
      const auto& emb = p.type_embeddings[t];
      if (!emb) throw ShapeError("featureless type '" + name + "' has no embedding");
      if (emb->rows() != rows || emb->cols() != input_dim)
        throw ShapeError("embedding of type '" + name + "' must be " + std::to_string(rows) + "x" +
                         std::to_string(input_dim));
    }
  }
  for (std::size_t l = 0; l < layers; ++l) {
    const auto d_in = l == 0 ? input_dim : hidden;
    const auto tag = "layer " + std::to_string(l);
    if (p.self_weights[l].rows() != d_in || p.self_weights[l].cols() != hidden)
      throw ShapeError(tag + ": self weight must be " + std::to_string(d_in) + "x" + std::to_string(hidden));
    if (p.relation_weights[l].size() != g.relations.size())
      throw ShapeError(tag + ": expected " + std::to_string(g.relations.size()) + " relation weights, got " +
                       std::to_string(p.relation_weights[l].size()));
    for (std::size_t r = 0; r < g.relations.size(); ++r) {
      const auto& w = p.relation_weights[l][r];
      if (w.rows() != d_in || w.cols() != hidden)
        throw ShapeError(tag + ", relation '" + g.relations[r].name + "': weight must be " + std::to_string(d_in) +
                         "x" + std::to_string(hidden));
    }
  }
  if (p.output_head.rows() != hidden || p.output_head.cols() != g.num_classes)
    throw ShapeError("output head must be " + std::to_string(hidden) + "x" + std::to_string(g.num_classes));
}

}  // namespace detail

// Full forward pass over every node of every type. The returned trace holds
// the target logits in `logits`.
inline ForwardTrace forward(const HeteroGraph& g, const RelationalModelParams& p) {
  detail::check_shapes(g, p);
  const auto num_types = g.node_types.size();

  ForwardTrace trace;
  trace.graph_fingerprint = fingerprint(g);
  trace.params_fingerprint = fingerprint(p);

  std::vector<Matrix> h(num_types);
  for (std::size_t t = 0; t < num_types; ++t) h[t] = g.features[t] ? *g.features[t] : *p.type_embeddings[t];

  for (std::size_t l = 0; l < p.num_layers(); ++l) {
    LayerCache cache;
    cache.input = std::move(h);
    cache.aggregated.reserve(g.relations.size());
    cache.preact.resize(num_types);
    for (std::size_t t = 0; t < num_types; ++t) cache.preact[t] = cache.input[t] * p.self_weights[l];
    for (std::size_t r = 0; r < g.relations.size(); ++r) {
      const auto& rel = g.relations[r];
      cache.aggregated.push_back(detail::mean_gather(g.edges[r], cache.input[rel.src], g.node_types[rel.dst].count));
      cache.preact[rel.dst].noalias() += cache.aggregated.back() * p.relation_weights[l][r];
    }
    h.assign(num_types, Matrix());
    for (std::size_t t = 0; t < num_types; ++t) h[t] = cache.preact[t].cwiseMax(0.0);
    trace.layers.push_back(std::move(cache));
  }

  trace.final_target = std::move(h[g.target_type]);
  trace.logits = trace.final_target * p.output_head;
  return trace;
}

// Unreduced cross-entropy: -log softmax(z_v)[y_v] for each v in `nodes`, in order.
inline std::vector<double> per_node_losses(const Matrix& logits, std::span<const int> labels,
                                           std::span<const NodeId> nodes) {
  std::vector<double> out;
  out.reserve(nodes.size());
  for (auto v : nodes) {
    if (v >= logits.rows() || v >= labels.size())
      throw IndexError("node index " + std::to_string(v) + " out of range for " + std::to_string(logits.rows()) +
                       " target nodes");
    const int y = labels[v];
    if (y < 0 || y >= logits.cols())
      throw IndexError("label " + std::to_string(y) + " of node " + std::to_string(v) + " out of range");
    const auto z = logits.row(v);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    out.push_back(lse - z(y));
  }
  return out;
}

// Gradient of mean_{v in selected} loss_v with respect to every parameter.
// Unselected nodes still feed messages to selected ones.
inline RelationalModelParams backward(const ForwardTrace& trace, std::span<const NodeId> selected,
                                      const HeteroGraph& g, const RelationalModelParams& p) {
  if (selected.empty()) throw ContractError("backward needs a non-empty selection");
  if (trace.graph_fingerprint != fingerprint(g) || trace.params_fingerprint != fingerprint(p))
    throw ContractError("stale forward trace: graph or parameters changed since forward");
  if (trace.layers.size() != p.num_layers()) throw ContractError("trace does not match the model depth");

  const auto num_types = g.node_types.size();
  const auto& logits = trace.logits;
  const double scale = 1.0 / static_cast<double>(selected.size());

  Matrix d_logits = Matrix::Zero(logits.rows(), logits.cols());
  for (auto v : selected) {
    if (v >= logits.rows()) throw IndexError("selected node " + std::to_string(v) + " out of range");
    const int y = g.labels[v];
    const auto z = logits.row(v);
    const double m = z.maxCoeff();
    Eigen::RowVectorXd prob = (z.array() - m).exp();
    prob /= prob.sum();
    prob(y) -= 1.0;
    d_logits.row(v) += scale * prob;
  }

  RelationalModelParams grad = p.zeros_like();
  grad.output_head.noalias() = trace.final_target.transpose() * d_logits;

  std::vector<Matrix> d_h(num_types);
  for (std::size_t t = 0; t < num_types; ++t) {
    const auto& preact = trace.layers.back().preact[t];
    d_h[t] = Matrix::Zero(preact.rows(), preact.cols());
  }
  d_h[g.target_type].noalias() = d_logits * p.output_head.transpose();

  for (std::size_t l = p.num_layers(); l-- > 0;) {
    const auto& cache = trace.layers[l];
    std::vector<Matrix> d_z(num_types);
    for (std::size_t t = 0; t < num_types; ++t)
      d_z[t] = (cache.preact[t].array() > 0.0).select(d_h[t].array(), 0.0).matrix();

    std::vector<Matrix> d_in(num_types);
    for (std::size_t t = 0; t < num_types; ++t) {
      grad.self_weights[l].noalias() += cache.input[t].transpose() * d_z[t];
      d_in[t].noalias() = d_z[t] * p.self_weights[l].transpose();
    }
    for (std::size_t r = 0; r < g.relations.size(); ++r) {
      const auto& rel = g.relations[r];
      grad.relation_weights[l][r].noalias() = cache.aggregated[r].transpose() * d_z[rel.dst];
      const Matrix d_agg = d_z[rel.dst] * p.relation_weights[l][r].transpose();
      detail::mean_scatter_add(g.edges[r], d_agg, d_in[rel.src]);
    }
    d_h = std::move(d_in);
  }

  for (std::size_t t = 0; t < num_types; ++t)
    if (grad.type_embeddings[t]) *grad.type_embeddings[t] = d_h[t];
  return grad;
}

}  // namespace lts
