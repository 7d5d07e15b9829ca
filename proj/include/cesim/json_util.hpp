#pragma once
// Field readers shared by the document loaders. Each reader takes the JSON
// path of the value so schema errors name the offending field.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

#include "cesim/error.hpp"
#include "cesim/fixed.hpp"

namespace cesim::jsonu {

using json = nlohmann::json;

[[noreturn]] inline void schema_error(const std::string& path, const std::string& what) {
  fail(ErrorCode::invalid_argument, "schema violation at '" + path + "': " + what);
}

inline const json& member(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object()) schema_error(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) schema_error(path + "." + key, "required field missing");
  return *it;
}

inline std::string get_string(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_string()) schema_error(path + "." + key, "expected a string");
  return v.get<std::string>();
}

inline std::string get_string_or(const json& obj, const char* key, const std::string& path,
                                 const std::string& fallback) {
  if (!obj.is_object() || !obj.contains(key)) return fallback;
  return get_string(obj, key, path);
}

// Accepts JSON numbers and decimal strings ("100.0").
inline Fixed to_fixed(const json& v, const std::string& path) {
  try {
    if (v.is_number_integer()) return Fixed::units(v.get<std::int64_t>());
    if (v.is_number_float()) {
      try {
        return Fixed::parse(v.dump());
      } catch (const Error&) {
        return Fixed::from_double(v.get<double>());
      }
    }
    if (v.is_string()) return Fixed::parse(v.get<std::string>());
  } catch (const Error& e) {
    schema_error(path, e.what());
  }
  schema_error(path, "expected a number");
}

inline Fixed get_fixed(const json& obj, const char* key, const std::string& path) {
  return to_fixed(member(obj, key, path), path + "." + key);
}

inline std::optional<Fixed> get_fixed_opt(const json& obj, const char* key, const std::string& path) {
  if (!obj.is_object() || !obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get_fixed(obj, key, path);
}

inline double get_double(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return std::stod(v.get<std::string>());
    } catch (...) {
    }
  }
  schema_error(path + "." + key, "expected a number");
}

inline const json& get_array(const json& obj, const char* key, const std::string& path) {
  const json& v = member(obj, key, path);
  if (!v.is_array()) schema_error(path + "." + key, "expected an array");
  return v;
}

inline json fixed_json(Fixed f) {
  if (f.raw() % Fixed::kScale == 0) return f.raw() / Fixed::kScale;
  return f.to_double();
}

}  // namespace cesim::jsonu
