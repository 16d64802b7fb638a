#pragma once

// Shared helpers for the JSON file formats: a float formatter that always
// emits 17 significant digits (nlohmann's shortest round-trip form may use
// fewer), and checked accessors that report the offending field path.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include <json.hpp>

#include "lts/error.hpp"
#include "lts/matrix.hpp"

namespace lts::detail {

using json = nlohmann::json;

inline std::string format_double(double v) {
  if (!std::isfinite(v)) throw DataError("cannot serialize non-finite value to JSON");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  std::string s(buf);
  // Keep integral-looking values typed as floats on re-read.
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

inline std::string quote(std::string_view s) { return json(std::string(s)).dump(); }

inline void write_matrix(std::ostream& os, const Matrix& m, std::string_view indent) {
  os << "[";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    os << (i ? ",\n" : "\n") << indent << "  [";
    for (Eigen::Index j = 0; j < m.cols(); ++j) os << (j ? ", " : "") << format_double(m(i, j));
    os << "]";
  }
  if (m.rows() > 0) os << "\n" << indent;
  os << "]";
}

inline json parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open '" + path + "' for reading");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    // nlohmann reports "line L, column C" in what().
    throw ParseError(path + ": " + e.what());
  }
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ParseError("cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw ParseError("write to '" + path + "' failed");
}

inline const json& require(const json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw ParseError(path + ": expected a JSON object");
  auto it = obj.find(key);
  if (it == obj.end()) throw ParseError(path + ": missing required field '" + key + "'");
  return *it;
}

inline std::string join_path(const std::string& path, const std::string& key) {
  return path.empty() ? key : path + "." + key;
}

inline std::int64_t as_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) throw ParseError(path + ": expected an integer");
  return v.get<std::int64_t>();
}

inline std::uint64_t as_index(const json& v, const std::string& path) {
  const auto i = as_int(v, path);
  if (i < 0) throw ParseError(path + ": expected a non-negative integer");
  return static_cast<std::uint64_t>(i);
}

inline double as_double(const json& v, const std::string& path) {
  if (!v.is_number()) throw ParseError(path + ": expected a number");
  return v.get<double>();
}

inline std::string as_string(const json& v, const std::string& path) {
  if (!v.is_string()) throw ParseError(path + ": expected a string");
  return v.get<std::string>();
}

inline const json& as_array(const json& v, const std::string& path) {
  if (!v.is_array()) throw ParseError(path + ": expected an array");
  return v;
}

inline Matrix as_matrix(const json& v, const std::string& path) {
  as_array(v, path);
  const auto rows = v.size();
  const auto cols = rows ? as_array(v[0], path + "[0]").size() : 0;
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    const auto row_path = path + "[" + std::to_string(i) + "]";
    const auto& row = as_array(v[i], row_path);
    if (row.size() != cols) throw ParseError(row_path + ": ragged matrix row");
    for (std::size_t j = 0; j < cols; ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          as_double(row[j], row_path + "[" + std::to_string(j) + "]");
  }
  return m;
}

}  // namespace lts::detail
