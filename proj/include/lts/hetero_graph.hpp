#pragma once

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "lts/error.hpp"
#include "lts/matrix.hpp"

namespace lts {

using NodeId = std::uint32_t;

struct NodeType {
  std::string name;
  std::size_t count = 0;

  bool operator==(const NodeType&) const = default;
};

// A typed directed relation. `src` and `dst` index into HeteroGraph::node_types.
struct Relation {
  std::string name;
  std::size_t src = 0;
  std::size_t dst = 0;

  bool operator==(const Relation&) const = default;
};

struct Edge {
  NodeId src = 0;
  NodeId dst = 0;

  auto operator<=>(const Edge&) const = default;
};

struct Splits {
  std::vector<NodeId> train;
  std::vector<NodeId> val;
  std::vector<NodeId> test;

  bool operator==(const Splits&) const = default;
};

// Typed nodes, typed directed edges and labels on one target node type.
// Indices in edges, labels and splits are local to their node type.
struct HeteroGraph {
  std::vector<NodeType> node_types;
  std::vector<std::optional<Matrix>> features;  // parallel to node_types; nullopt = featureless
  std::vector<Relation> relations;
  std::vector<std::vector<Edge>> edges;  // parallel to relations
  std::size_t target_type = 0;
  std::vector<int> labels;  // one per target-type node
  int num_classes = 0;
  Splits splits;

  std::size_t num_targets() const { return node_types.at(target_type).count; }

  std::size_t num_edges() const {
    std::size_t n = 0;
    for (const auto& e : edges) n += e.size();
    return n;
  }

  std::size_t type_index(std::string_view name) const {
    for (std::size_t i = 0; i < node_types.size(); ++i)
      if (node_types[i].name == name) return i;
    throw ValidationError("unknown node type '" + std::string(name) + "'");
  }

  std::size_t relation_index(std::string_view name) const {
    for (std::size_t i = 0; i < relations.size(); ++i)
      if (relations[i].name == name) return i;
    throw ValidationError("unknown relation '" + std::string(name) + "'");
  }

  // Common input width of all featured types, or nullopt when every type is
  // featureless. Throws ShapeError when featured types disagree.
  std::optional<std::size_t> feature_dim() const {
    std::optional<std::size_t> dim;
    for (std::size_t i = 0; i < features.size(); ++i) {
      if (!features[i]) continue;
      auto d = static_cast<std::size_t>(features[i]->cols());
      if (dim && *dim != d)
        throw ShapeError("feature width of type '" + node_types[i].name + "' is " + std::to_string(d) +
                         ", expected " + std::to_string(*dim));
      dim = d;
    }
    return dim;
  }
};

inline bool operator==(const HeteroGraph& a, const HeteroGraph& b) {
  if (a.node_types != b.node_types || a.relations != b.relations || a.edges != b.edges ||
      a.target_type != b.target_type || a.labels != b.labels || a.num_classes != b.num_classes ||
      a.splits != b.splits || a.features.size() != b.features.size())
    return false;
  for (std::size_t i = 0; i < a.features.size(); ++i) {
    const auto& fa = a.features[i];
    const auto& fb = b.features[i];
    if (fa.has_value() != fb.has_value()) return false;
    if (!fa) continue;
    if (fa->rows() != fb->rows() || fa->cols() != fb->cols()) return false;
    // Bitwise comparison: -0.0 vs 0.0 and NaN payloads must survive I/O too.
    for (Eigen::Index k = 0; k < fa->size(); ++k)
      if (std::bit_cast<std::uint64_t>(fa->data()[k]) != std::bit_cast<std::uint64_t>(fb->data()[k]))
        return false;
  }
  return true;
}

// Throws ValidationError naming the first violated invariant.
inline void validate(const HeteroGraph& g) {
  const auto fail = [](const std::string& msg) { throw ValidationError(msg); };
  if (g.node_types.empty()) fail("graph declares no node types");
  if (g.features.size() != g.node_types.size()) fail("features must have one entry per node type");
  if (g.edges.size() != g.relations.size()) fail("edges must have one list per relation");
  if (g.target_type >= g.node_types.size()) fail("target_type is not a declared node type");
  if (g.num_classes < 1) fail("num_classes must be positive");

  std::set<std::string> names;
  for (const auto& t : g.node_types)
    if (!names.insert(t.name).second) fail("duplicate node type name '" + t.name + "'");
  names.clear();
  for (const auto& r : g.relations) {
    if (!names.insert(r.name).second) fail("duplicate relation name '" + r.name + "'");
    if (r.src >= g.node_types.size() || r.dst >= g.node_types.size())
      fail("relation '" + r.name + "' references an unknown node type");
  }

  for (std::size_t i = 0; i < g.node_types.size(); ++i) {
    const auto& f = g.features[i];
    if (f && static_cast<std::size_t>(f->rows()) != g.node_types[i].count)
      fail("feature matrix of type '" + g.node_types[i].name + "' has " + std::to_string(f->rows()) +
           " rows but the type has " + std::to_string(g.node_types[i].count) + " nodes");
  }

  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& rel = g.relations[r];
    const auto n_src = g.node_types[rel.src].count;
    const auto n_dst = g.node_types[rel.dst].count;
    for (std::size_t e = 0; e < g.edges[r].size(); ++e) {
      const auto& edge = g.edges[r][e];
      if (edge.src >= n_src || edge.dst >= n_dst)
        fail("edge endpoint out of range: relation '" + rel.name + "' edge " + std::to_string(e) + " (" +
             std::to_string(edge.src) + ", " + std::to_string(edge.dst) + ")");
    }
  }

  const auto n_target = g.num_targets();
  if (g.labels.size() != n_target)
    fail("labels has " + std::to_string(g.labels.size()) + " entries but target type has " +
         std::to_string(n_target) + " nodes");
  for (std::size_t i = 0; i < g.labels.size(); ++i)
    if (g.labels[i] < 0 || g.labels[i] >= g.num_classes)
      fail("label out of range [0, num_classes): node " + std::to_string(i) + " has label " +
           std::to_string(g.labels[i]));

  std::vector<char> seen(n_target, 0);
  const auto check_split = [&](const std::vector<NodeId>& split, const char* name) {
    for (auto v : split) {
      if (v >= n_target) fail(std::string("split '") + name + "' index " + std::to_string(v) + " out of range");
      if (seen[v]) fail(std::string("splits not disjoint: node ") + std::to_string(v) + " repeated in '" + name + "'");
      seen[v] = 1;
    }
  };
  check_split(g.splits.train, "train");
  check_split(g.splits.val, "val");
  check_split(g.splits.test, "test");
}

inline std::uint64_t fingerprint(const HeteroGraph& g) {
  Fingerprint fp;
  for (std::size_t i = 0; i < g.node_types.size(); ++i) {
    fp.mix(static_cast<std::uint64_t>(g.node_types[i].count));
    if (i < g.features.size() && g.features[i]) fp.mix(*g.features[i]);
    else fp.mix(~std::uint64_t{0});
  }
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    fp.mix(static_cast<std::uint64_t>(g.relations[r].src));
    fp.mix(static_cast<std::uint64_t>(g.relations[r].dst));
    for (const auto& e : g.edges[r]) fp.mix((std::uint64_t{e.src} << 32) | e.dst);
  }
  fp.mix(static_cast<std::uint64_t>(g.target_type));
  for (int y : g.labels) fp.mix(static_cast<std::uint64_t>(y));
  return fp.value();
}

// floor(n * fraction) with a guard so that decimal fractions such as 0.29
// (stored as 0.28999...) still give the mathematically expected count.
inline std::size_t proportional_count(std::size_t n, double fraction) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(n) * fraction + 1e-9));
}

// ---------------------------------------------------------------------------
// Label noise

struct NoiseRecord {
  std::vector<NodeId> flipped;             // ascending
  std::map<NodeId, int> original_labels;  // flipped index -> class before the flip

  bool contains(NodeId v) const { return original_labels.count(v) != 0; }
  bool operator==(const NoiseRecord&) const = default;
};

// Replaces floor(rho * |train|) training labels, chosen uniformly without
// replacement, by a uniformly drawn different class. Val/test are untouched.
inline std::pair<HeteroGraph, NoiseRecord> inject_label_noise(HeteroGraph graph, double rho, std::uint64_t seed) {
  if (!(rho >= 0.0 && rho <= 1.0)) throw ContractError("noise rate must lie in [0, 1], got " + std::to_string(rho));
  NoiseRecord record;
  const auto& train = graph.splits.train;
  const auto m = proportional_count(train.size(), rho);
  if (m == 0) return {std::move(graph), std::move(record)};
  if (graph.num_classes < 2) throw ContractError("label noise needs at least two classes");

  std::mt19937_64 rng(seed);
  std::vector<NodeId> pool = train;
  std::shuffle(pool.begin(), pool.end(), rng);
  pool.resize(m);
  std::sort(pool.begin(), pool.end());

  std::uniform_int_distribution<int> other(0, graph.num_classes - 2);
  for (auto v : pool) {
    const int original = graph.labels[v];
    int replacement = other(rng);
    if (replacement >= original) ++replacement;
    graph.labels[v] = replacement;
    record.original_labels.emplace(v, original);
  }
  record.flipped = std::move(pool);
  return {std::move(graph), std::move(record)};
}

// ---------------------------------------------------------------------------
// Synthetic generation

struct SyntheticNodeType {
  std::string name;
  std::size_t count = 0;
  std::size_t feature_dim = 0;  // 0 = featureless
};

struct SyntheticRelation {
  std::string name;
  std::string src;
  std::string dst;
};

// Class-conditioned Gaussian features plus stochastic-block-model edges.
// Every node (target or not) carries a class: the label for target nodes, a
// latent community for the others. Edges between nodes of the same class are
// drawn with probability p_intra, otherwise p_inter.
struct SyntheticSpec {
  std::vector<SyntheticNodeType> node_types;
  std::vector<SyntheticRelation> relations;
  std::string target_type;
  int num_classes = 2;
  double sigma = 1.0;  // distance between any two class means
  double p_intra = 0.05;
  double p_inter = 0.005;
  double train_frac = 0.5;
  double val_frac = 0.25;
  double test_frac = 0.25;

  // Two-type academic schema: featured `paper` targets with `cites`, plus
  // featureless `author` nodes linked both ways.
  static SyntheticSpec paper_author(std::size_t target_nodes, int num_classes, std::size_t feature_dim = 16) {
    SyntheticSpec s;
    s.node_types = {{"paper", target_nodes, feature_dim}, {"author", target_nodes / 2, 0}};
    s.relations = {{"cites", "paper", "paper"}, {"writes", "author", "paper"}, {"written_by", "paper", "author"}};
    s.target_type = "paper";
    s.num_classes = num_classes;
    return s;
  }
};

namespace detail {

inline std::size_t spec_type_index(const SyntheticSpec& spec, const std::string& name, const std::string& field) {
  for (std::size_t i = 0; i < spec.node_types.size(); ++i)
    if (spec.node_types[i].name == name) return i;
  throw ConfigError(field + ": unknown node type '" + name + "'");
}

inline void check_spec(const SyntheticSpec& spec) {
  if (spec.node_types.empty()) throw ConfigError("node_types: at least one node type is required");
  std::set<std::string> names;
  for (const auto& t : spec.node_types) {
    if (!names.insert(t.name).second) throw ConfigError("node_types: duplicate name '" + t.name + "'");
    if (t.count == 0) throw ConfigError("node_types: type '" + t.name + "' requests 0 nodes");
    if (t.feature_dim != 0 && t.feature_dim < static_cast<std::size_t>(std::max(spec.num_classes, 0)))
      throw ConfigError("feature_dim: type '" + t.name + "' needs at least num_classes feature columns");
  }
  spec_type_index(spec, spec.target_type, "target_type");
  if (spec.num_classes < 2) throw ConfigError("num_classes: must be at least 2");
  if (!(spec.sigma >= 0.0) || !std::isfinite(spec.sigma)) throw ConfigError("sigma: must be finite and >= 0");
  if (!(spec.p_intra >= 0.0 && spec.p_intra <= 1.0)) throw ConfigError("p_intra: must lie in [0, 1]");
  if (!(spec.p_inter >= 0.0 && spec.p_inter <= 1.0)) throw ConfigError("p_inter: must lie in [0, 1]");
  if (spec.relations.empty()) throw ConfigError("relations: at least one relation is required");
  names.clear();
  for (const auto& r : spec.relations) {
    if (!names.insert(r.name).second) throw ConfigError("relations: duplicate name '" + r.name + "'");
    spec_type_index(spec, r.src, "relations." + r.name + ".src");
    spec_type_index(spec, r.dst, "relations." + r.name + ".dst");
  }
  for (double f : {spec.train_frac, spec.val_frac, spec.test_frac})
    if (!(f >= 0.0)) throw ConfigError("split fractions: must be >= 0");
  if (spec.train_frac + spec.val_frac + spec.test_frac > 1.0 + 1e-12)
    throw ConfigError("split fractions: train + val + test must not exceed 1");
}

}  // namespace detail

inline HeteroGraph generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  detail::check_spec(spec);
  std::mt19937_64 rng(seed);
  const auto num_types = spec.node_types.size();
  const auto num_classes = spec.num_classes;

  HeteroGraph g;
  g.num_classes = num_classes;
  g.target_type = detail::spec_type_index(spec, spec.target_type, "target_type");
  for (const auto& t : spec.node_types) g.node_types.push_back({t.name, t.count});

  const auto n_target = spec.node_types[g.target_type].count;
  const auto n_train = proportional_count(n_target, spec.train_frac);
  const auto n_val = proportional_count(n_target, spec.val_frac);
  const auto n_test = proportional_count(n_target, spec.test_frac);
  if (n_train == 0) throw ConfigError("train_frac: train split would be empty");
  if (n_val == 0) throw ConfigError("val_frac: validation split would be empty");
  if (n_test == 0) throw ConfigError("test_frac: test split would be empty");

  // Balanced class assignment: round-robin, then shuffled.
  std::vector<std::vector<int>> node_class(num_types);
  for (std::size_t t = 0; t < num_types; ++t) {
    auto& cls = node_class[t];
    cls.resize(spec.node_types[t].count);
    for (std::size_t i = 0; i < cls.size(); ++i) cls[i] = static_cast<int>(i % static_cast<std::size_t>(num_classes));
    std::shuffle(cls.begin(), cls.end(), rng);
  }
  g.labels = node_class[g.target_type];

  // Class means sigma/sqrt(2) * e_c are pairwise exactly sigma apart.
  std::normal_distribution<double> unit_normal(0.0, 1.0);
  const double scale = spec.sigma / std::sqrt(2.0);
  g.features.resize(num_types);
  for (std::size_t t = 0; t < num_types; ++t) {
    const auto dim = spec.node_types[t].feature_dim;
    if (dim == 0) continue;
    Matrix x(static_cast<Eigen::Index>(spec.node_types[t].count), static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
      for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = unit_normal(rng);
      x(i, node_class[t][static_cast<std::size_t>(i)]) += scale;
    }
    g.features[t] = std::move(x);
  }

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  for (const auto& r : spec.relations) {
    const auto src = detail::spec_type_index(spec, r.src, "relations.src");
    const auto dst = detail::spec_type_index(spec, r.dst, "relations.dst");
    g.relations.push_back({r.name, src, dst});
    std::vector<Edge> list;
    for (std::size_t u = 0; u < spec.node_types[src].count; ++u) {
      for (std::size_t v = 0; v < spec.node_types[dst].count; ++v) {
        if (src == dst && u == v) continue;
        const double p = node_class[src][u] == node_class[dst][v] ? spec.p_intra : spec.p_inter;
        if (coin(rng) < p) list.push_back({static_cast<NodeId>(u), static_cast<NodeId>(v)});
      }
    }
    g.edges.push_back(std::move(list));
  }

  std::vector<NodeId> order(n_target);
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<NodeId> s(order.begin() + static_cast<std::ptrdiff_t>(from),
                          order.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(s.begin(), s.end());
    return s;
  };
  g.splits.train = take(0, n_train);
  g.splits.val = take(n_train, n_val);
  g.splits.test = take(n_train + n_val, n_test);

  validate(g);
  return g;
}

}  // namespace lts
