#pragma once

#include <sstream>
#include <string>

#include "lts/detail/json_text.hpp"
#include "lts/hetero_graph.hpp"

namespace lts {

inline std::string graph_to_json(const HeteroGraph& g) {
  using detail::quote;
  std::ostringstream os;
  os << "{\n  \"node_types\": [";
  for (std::size_t i = 0; i < g.node_types.size(); ++i)
    os << (i ? ", " : "") << "{\"name\": " << quote(g.node_types[i].name) << ", \"count\": " << g.node_types[i].count
       << "}";
  os << "],\n  \"features\": {";
  for (std::size_t i = 0; i < g.node_types.size(); ++i) {
    os << (i ? "," : "") << "\n    " << quote(g.node_types[i].name) << ": ";
    if (g.features[i]) detail::write_matrix(os, *g.features[i], "    ");
    else os << "null";
  }
  os << "\n  },\n  \"relations\": [";
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    const auto& rel = g.relations[r];
    os << (r ? ", " : "") << "{\"name\": " << quote(rel.name) << ", \"src\": " << quote(g.node_types[rel.src].name)
       << ", \"dst\": " << quote(g.node_types[rel.dst].name) << "}";
  }
  os << "],\n  \"edges\": {";
  for (std::size_t r = 0; r < g.relations.size(); ++r) {
    os << (r ? "," : "") << "\n    " << quote(g.relations[r].name) << ": [";
    for (std::size_t e = 0; e < g.edges[r].size(); ++e)
      os << (e ? ", " : "") << "[" << g.edges[r][e].src << ", " << g.edges[r][e].dst << "]";
    os << "]";
  }
  os << "\n  },\n  \"target_type\": " << quote(g.node_types[g.target_type].name);
  os << ",\n  \"labels\": [";
  for (std::size_t i = 0; i < g.labels.size(); ++i) os << (i ? ", " : "") << g.labels[i];
  os << "],\n  \"num_classes\": " << g.num_classes;
  const auto write_ids = [&os](const std::vector<NodeId>& ids) {
    os << "[";
    for (std::size_t i = 0; i < ids.size(); ++i) os << (i ? ", " : "") << ids[i];
    os << "]";
  };
  os << ",\n  \"splits\": {\"train\": ";
  write_ids(g.splits.train);
  os << ", \"val\": ";
  write_ids(g.splits.val);
  os << ", \"test\": ";
  write_ids(g.splits.test);
  os << "}\n}\n";
  return os.str();
}

// Parses and validates. Structural problems raise ParseError with the field
// path; invariant violations raise ValidationError.
inline HeteroGraph graph_from_json(const detail::json& doc) {
  using namespace detail;
  HeteroGraph g;

  const auto& types = as_array(require(doc, "node_types", ""), "node_types");
  for (std::size_t i = 0; i < types.size(); ++i) {
    const auto p = "node_types[" + std::to_string(i) + "]";
    g.node_types.push_back({as_string(require(types[i], "name", p), p + ".name"),
                            static_cast<std::size_t>(as_index(require(types[i], "count", p), p + ".count"))});
  }
  const auto type_of = [&g](const json& v, const std::string& path) {
    const auto name = as_string(v, path);
    for (std::size_t i = 0; i < g.node_types.size(); ++i)
      if (g.node_types[i].name == name) return i;
    throw ValidationError(path + ": unknown node type '" + name + "'");
  };

  const auto& feats = require(doc, "features", "");
  if (!feats.is_object()) throw ParseError("features: expected an object");
  g.features.resize(g.node_types.size());
  for (auto it = feats.begin(); it != feats.end(); ++it) {
    const auto path = "features." + it.key();
    const auto t = type_of(json(it.key()), path);
    if (it->is_null()) continue;
    g.features[t] = as_matrix(*it, path);
    // An empty array still has to carry the declared row count.
    if (g.features[t]->rows() == 0 && g.node_types[t].count != 0)
      throw ValidationError(path + ": feature matrix has 0 rows");
  }

  const auto& rels = as_array(require(doc, "relations", ""), "relations");
  for (std::size_t r = 0; r < rels.size(); ++r) {
    const auto p = "relations[" + std::to_string(r) + "]";
    g.relations.push_back({as_string(require(rels[r], "name", p), p + ".name"),
                           type_of(require(rels[r], "src", p), p + ".src"),
                           type_of(require(rels[r], "dst", p), p + ".dst")});
  }

  const auto& edges = require(doc, "edges", "");
  if (!edges.is_object()) throw ParseError("edges: expected an object");
  g.edges.resize(g.relations.size());
  for (auto it = edges.begin(); it != edges.end(); ++it) {
    const auto path = "edges." + it.key();
    std::size_t r = g.relations.size();
    for (std::size_t k = 0; k < g.relations.size(); ++k)
      if (g.relations[k].name == it.key()) r = k;
    if (r == g.relations.size()) throw ValidationError(path + ": edges for undeclared relation");
    const auto& list = as_array(*it, path);
    g.edges[r].reserve(list.size());
    for (std::size_t e = 0; e < list.size(); ++e) {
      const auto ep = path + "[" + std::to_string(e) + "]";
      const auto& pair = as_array(list[e], ep);
      if (pair.size() != 2) throw ParseError(ep + ": expected [src, dst]");
      const auto s = as_index(pair[0], ep + "[0]");
      const auto d = as_index(pair[1], ep + "[1]");
      if (s > UINT32_MAX || d > UINT32_MAX) throw ValidationError(ep + ": edge endpoint out of range");
      g.edges[r].push_back({static_cast<NodeId>(s), static_cast<NodeId>(d)});
    }
  }

  g.target_type = type_of(require(doc, "target_type", ""), "target_type");

  const auto& labels = as_array(require(doc, "labels", ""), "labels");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto y = as_int(labels[i], "labels[" + std::to_string(i) + "]");
    if (y < INT32_MIN || y > INT32_MAX) throw ValidationError("labels[" + std::to_string(i) + "]: out of range");
    g.labels.push_back(static_cast<int>(y));
  }
  const auto classes = as_int(require(doc, "num_classes", ""), "num_classes");
  if (classes < 1 || classes > INT32_MAX) throw ValidationError("num_classes: must be positive");
  g.num_classes = static_cast<int>(classes);

  const auto& splits = require(doc, "splits", "");
  const auto read_ids = [&](const char* key) {
    const auto path = std::string("splits.") + key;
    const auto& arr = as_array(require(splits, key, "splits"), path);
    std::vector<NodeId> ids;
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const auto v = as_index(arr[i], path + "[" + std::to_string(i) + "]");
      if (v > UINT32_MAX) throw ValidationError(path + ": index out of range");
      ids.push_back(static_cast<NodeId>(v));
    }
    return ids;
  };
  g.splits.train = read_ids("train");
  g.splits.val = read_ids("val");
  g.splits.test = read_ids("test");

  validate(g);
  return g;
}

inline void save_graph(const HeteroGraph& g, const std::string& path) {
  validate(g);
  detail::write_file(path, graph_to_json(g));
}

inline HeteroGraph load_graph(const std::string& path) {
  const auto doc = detail::parse_file(path);
  try {
    return graph_from_json(doc);
  } catch (const ParseError& e) {
    throw ParseError(path + ": " + e.what());
  } catch (const ValidationError& e) {
    throw ValidationError(path + ": " + e.what());
  }
}

// Noise sidecar: {"flipped": [...], "original_labels": [[idx, class], ...]}.
inline void save_noise_record(const NoiseRecord& rec, const std::string& path) {
  std::ostringstream os;
  os << "{\n  \"flipped\": [";
  for (std::size_t i = 0; i < rec.flipped.size(); ++i) os << (i ? ", " : "") << rec.flipped[i];
  os << "],\n  \"original_labels\": [";
  bool first = true;
  for (const auto& [v, y] : rec.original_labels) {
    os << (first ? "" : ", ") << "[" << v << ", " << y << "]";
    first = false;
  }
  os << "]\n}\n";
  detail::write_file(path, os.str());
}

inline NoiseRecord load_noise_record(const std::string& path) {
  using namespace detail;
  const auto doc = parse_file(path);
  NoiseRecord rec;
  const auto& flipped = as_array(require(doc, "flipped", path), path + ": flipped");
  for (std::size_t i = 0; i < flipped.size(); ++i)
    rec.flipped.push_back(static_cast<NodeId>(as_index(flipped[i], path + ": flipped[" + std::to_string(i) + "]")));
  const auto& orig = as_array(require(doc, "original_labels", path), path + ": original_labels");
  for (std::size_t i = 0; i < orig.size(); ++i) {
    const auto p = path + ": original_labels[" + std::to_string(i) + "]";
    const auto& pair = as_array(orig[i], p);
    if (pair.size() != 2) throw ParseError(p + ": expected [index, class]");
    rec.original_labels.emplace(static_cast<NodeId>(as_index(pair[0], p)), static_cast<int>(as_int(pair[1], p)));
  }
  std::sort(rec.flipped.begin(), rec.flipped.end());
  if (rec.flipped.size() != rec.original_labels.size())
    throw ValidationError(path + ": flipped and original_labels disagree");
  for (auto v : rec.flipped)
    if (!rec.contains(v)) throw ValidationError(path + ": flipped node " + std::to_string(v) + " has no original label");
  return rec;
}

}  // namespace lts
