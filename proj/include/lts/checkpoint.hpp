#pragma once

// Parameter checkpoint: a JSON object mapping each parameter name
// ("layer0.self", "layer1.rel.cites", "embed.author", "head") to a 2-D array.

#include <set>
#include <sstream>
#include <string>

#include "lts/detail/json_text.hpp"
#include "lts/gnn.hpp"

namespace lts {

inline std::string params_to_json(const RelationalModelParams& p) {
  std::ostringstream os;
  os << "{";
  bool first = true;
  p.for_each([&](const std::string& name, const Matrix& m) {
    os << (first ? "\n  " : ",\n  ") << detail::quote(name) << ": ";
    detail::write_matrix(os, m, "  ");
    first = false;
  });
  os << "\n}\n";
  return os.str();
}

inline void save_params(const RelationalModelParams& p, const std::string& path) {
  detail::write_file(path, params_to_json(p));
}

// The graph supplies the expected layout; every parameter must be present
// with the right shape and no extra names are accepted.
inline RelationalModelParams load_params(const std::string& path, const HeteroGraph& g, std::size_t num_layers) {
  const auto doc = detail::parse_file(path);
  if (!doc.is_object()) throw ParseError(path + ": expected a JSON object");
  const auto dims = ModelDims::from_graph(g, 1, num_layers);
  auto p = init_params(dims, ParamLayout::from_graph(g), 0);
  std::set<std::string> expected;
  p.for_each([&](const std::string& name, Matrix& m) {
    expected.insert(name);
    m = detail::as_matrix(detail::require(doc, name, path), path + ": " + name);
  });
  for (auto it = doc.begin(); it != doc.end(); ++it)
    if (!expected.count(it.key())) throw ValidationError(path + ": unexpected parameter '" + it.key() + "'");
  detail::check_shapes(g, p);
  return p;
}

}  // namespace lts
