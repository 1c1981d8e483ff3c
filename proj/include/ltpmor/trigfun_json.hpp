#pragma once

/// JSON form of trig polynomials:
///   vector: {"period": T, "depth": M, "dim": n,
///            "coeffs": [[k, [[re, im], ...]], ...]}
///   matrix: {"period": T, "depth": M, "rows": r, "cols": c,
///            "coeffs": [[k, [[[re, im], ...], ...]], ...]}   (row major)
/// Harmonics missing from "coeffs" are zero. Doubles are written with the
/// shortest representation that round-trips.

#include <string>

#include <nlohmann/json.hpp>

#include "ltpmor/trigfun.hpp"

namespace ltpmor {

using json = nlohmann::json;

namespace detail {

inline json complex_to_json(cplx z) { return json::array({z.real(), z.imag()}); }

inline cplx complex_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.size() != 2 || !j[0].is_number() || !j[1].is_number())
    throw ParseError(std::string(what) + ": expected [re, im]");
  return {j[0].get<double>(), j[1].get<double>()};
}

inline const json& require_field(const json& j, const char* key, const char* what) {
  if (!j.is_object()) throw ParseError(std::string(what) + ": expected an object");
  auto it = j.find(key);
  if (it == j.end())
    throw ParseError(std::string(what) + ": missing field \"" + key + "\"");
  return *it;
}

template <class T>
T require_number(const json& j, const char* key, const char* what) {
  const json& f = require_field(j, key, what);
  if (!f.is_number())
    throw ParseError(std::string(what) + ": field \"" + key + "\" must be a number");
  return f.get<T>();
}

}  // namespace detail

inline json to_json(const TrigVecFn& f) {
  json coeffs = json::array();
  for (int k = -f.depth(); k <= f.depth(); ++k) {
    json entries = json::array();
    for (Index i = 0; i < f.rows(); ++i) entries.push_back(detail::complex_to_json(f[k](i)));
    coeffs.push_back(json::array({k, std::move(entries)}));
  }
  return {{"period", f.period()}, {"depth", f.depth()}, {"dim", f.rows()}, {"coeffs", coeffs}};
}

inline json to_json(const TrigMatFn& f) {
  json coeffs = json::array();
  for (int k = -f.depth(); k <= f.depth(); ++k) {
    json rows = json::array();
    for (Index i = 0; i < f.rows(); ++i) {
      json row = json::array();
      for (Index j = 0; j < f.cols(); ++j) row.push_back(detail::complex_to_json(f[k](i, j)));
      rows.push_back(std::move(row));
    }
    coeffs.push_back(json::array({k, std::move(rows)}));
  }
  return {{"period", f.period()}, {"depth", f.depth()}, {"rows", f.rows()},
          {"cols", f.cols()},     {"coeffs", coeffs}};
}

inline TrigVecFn trig_vec_from_json(const json& j, const char* what = "trig vector") {
  const double period = detail::require_number<double>(j, "period", what);
  const int depth = detail::require_number<int>(j, "depth", what);
  const json& coeffs = detail::require_field(j, "coeffs", what);
  if (!coeffs.is_array()) throw ParseError(std::string(what) + ": \"coeffs\" must be an array");
  Index dim = 0;
  if (j.contains("dim")) {
    dim = detail::require_number<Index>(j, "dim", what);
  } else if (!coeffs.empty() && coeffs[0].is_array() && coeffs[0].size() == 2) {
    dim = static_cast<Index>(coeffs[0][1].size());
  }
  if (dim <= 0) throw ParseError(std::string(what) + ": cannot determine dimension");
  TrigVecFn f(period, depth, dim);
  for (const json& entry : coeffs) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
        !entry[1].is_array())
      throw ParseError(std::string(what) + ": coefficient entries must be [k, [[re, im], ...]]");
    const int k = entry[0].get<int>();
    if (std::abs(k) > depth)
      throw ParseError(std::string(what) + ": harmonic " + std::to_string(k) + " exceeds depth");
    if (static_cast<Index>(entry[1].size()) != dim)
      throw ParseError(std::string(what) + ": coefficient length differs from dim");
    for (Index i = 0; i < dim; ++i) f[k](i) = detail::complex_from_json(entry[1][i], what);
  }
  return f;
}

inline TrigMatFn trig_mat_from_json(const json& j, const char* what = "trig matrix") {
  const double period = detail::require_number<double>(j, "period", what);
  const int depth = detail::require_number<int>(j, "depth", what);
  const Index rows = detail::require_number<Index>(j, "rows", what);
  const Index cols = detail::require_number<Index>(j, "cols", what);
  const json& coeffs = detail::require_field(j, "coeffs", what);
  if (!coeffs.is_array()) throw ParseError(std::string(what) + ": \"coeffs\" must be an array");
  TrigMatFn f(period, depth, rows, cols);
  for (const json& entry : coeffs) {
    if (!entry.is_array() || entry.size() != 2 || !entry[0].is_number_integer() ||
        !entry[1].is_array() || static_cast<Index>(entry[1].size()) != rows)
      throw ParseError(std::string(what) + ": malformed coefficient entry");
    const int k = entry[0].get<int>();
    if (std::abs(k) > depth)
      throw ParseError(std::string(what) + ": harmonic " + std::to_string(k) + " exceeds depth");
    for (Index r = 0; r < rows; ++r) {
      const json& row = entry[1][r];
      if (!row.is_array() || static_cast<Index>(row.size()) != cols)
        throw ParseError(std::string(what) + ": row length differs from cols");
      for (Index c = 0; c < cols; ++c) f[k](r, c) = detail::complex_from_json(row[c], what);
    }
  }
  return f;
}

}  // namespace ltpmor
