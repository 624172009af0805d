#pragma once

// Checked access to JSON config values. Errors carry the JSON path.

#include <cmath>
#include <initializer_list>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "issp/serialization.hpp"

namespace issp::json_access {

// Config access. Every accessor reports the JSON path of a bad field.

[[noreturn]] inline void invalid(const std::string& path, const std::string& what) {
  throw Error(ErrorCode::kValidation, path + ": " + what);
}

inline std::string child(const std::string& path, const std::string& key) { return path + "." + key; }

inline void check_object(const Json& j, const std::string& path) {
  if (!j.is_object()) invalid(path, "expected an object");
}

inline void allow_keys(const Json& j, const std::string& path, std::initializer_list<const char*> keys) {
  check_object(j, path);
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) invalid(child(path, key), "unknown key");
  }
}

inline double as_number(const Json& j, const std::string& path) {
  if (!j.is_number()) invalid(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) invalid(path, "expected a finite number");
  return x;
}

inline double get_number(const Json& obj, const char* key, const std::string& path, double fallback) {
  if (!obj.contains(key)) return fallback;
  return as_number(obj.at(key), child(path, key));
}

inline std::optional<double> get_optional_number(const Json& obj, const char* key, const std::string& path) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return as_number(obj.at(key), child(path, key));
}

inline long long get_integer(const Json& obj, const char* key, const std::string& path, long long fallback,
                      long long min_value) {
  if (!obj.contains(key)) return fallback;
  const Json& j = obj.at(key);
  if (!j.is_number_integer()) invalid(child(path, key), "expected an integer");
  const long long v = j.get<long long>();
  if (v < min_value) invalid(child(path, key), "must be >= " + std::to_string(min_value));
  return v;
}

inline bool get_bool(const Json& obj, const char* key, const std::string& path, bool fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_boolean()) invalid(child(path, key), "expected true or false");
  return obj.at(key).get<bool>();
}

inline std::string get_string(const Json& obj, const char* key, const std::string& path,
                       const std::string& fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj.at(key).is_string()) invalid(child(path, key), "expected a string");
  return obj.at(key).get<std::string>();
}

inline Vector as_vector(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) invalid(path, "expected a nonempty array of numbers");
  Vector v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = as_number(j[i], path + "[" + std::to_string(i) + "]");
  }
  return v;
}

inline std::vector<double> as_list(const Json& j, const std::string& path) {
  const Vector v = as_vector(j, path);
  return std::vector<double>(v.data(), v.data() + v.size());
}

// A scalar is accepted where a list is expected.
inline std::vector<double> get_list(const Json& obj, const char* key, const std::string& path,
                             std::vector<double> fallback) {
  if (!obj.contains(key)) return fallback;
  const Json& j = obj.at(key);
  if (j.is_number()) return {as_number(j, child(path, key))};
  return as_list(j, child(path, key));
}

inline Matrix as_matrix(const Json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) invalid(path, "expected a nonempty array of rows");
  const std::size_t rows = j.size();
  std::size_t cols = 0;
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].empty()) invalid(path, "every row must be a nonempty array");
    if (i == 0) cols = j[i].size();
    if (j[i].size() != cols) invalid(path, "rows have different lengths");
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t k = 0; k < cols; ++k)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) =
          as_number(j[i][k], path + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  return m;
}

}  // namespace issp::json_access
