#include "cesim/json_schema.hpp"

#include <vector>

namespace cesim {

using json = nlohmann::json;

namespace {

bool has_type(const json& v, const std::string& t) {
  if (t == "object") return v.is_object();
  if (t == "array") return v.is_array();
  if (t == "string") return v.is_string();
  if (t == "boolean") return v.is_boolean();
  if (t == "integer") return v.is_number_integer() || (v.is_number_float() && v.get<double>() == static_cast<double>(static_cast<long long>(v.get<double>())));
  if (t == "number") return v.is_number();
  if (t == "null") return v.is_null();
  return false;
}

std::vector<std::string> types_of(const json& schema) {
  if (!schema.contains("type")) return {};
  const json& t = schema.at("type");
  if (t.is_string()) return {t.get<std::string>()};
  std::vector<std::string> out;
  for (const auto& x : t) out.push_back(x.get<std::string>());
  return out;
}

}  // namespace

std::optional<std::string> validate_schema(const json& value, const json& schema, const std::string& path) {
  auto types = types_of(schema);
  if (!types.empty()) {
    bool ok = false;
    for (const auto& t : types) ok = ok || has_type(value, t);
    if (!ok) {
      std::string want;
      for (const auto& t : types) want += (want.empty() ? "" : " or ") + t;
      return path + ": expected " + want;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& e : schema.at("enum")) ok = ok || e == value;
    if (!ok) return path + ": value not in " + schema.at("enum").dump();
  }
  if (value.is_number()) {
    double x = value.get<double>();
    if (schema.contains("minimum") && x < schema.at("minimum").get<double>())
      return path + ": must be >= " + schema.at("minimum").dump();
    if (schema.contains("exclusiveMinimum") && x <= schema.at("exclusiveMinimum").get<double>())
      return path + ": must be > " + schema.at("exclusiveMinimum").dump();
  }
  if (value.is_string() && schema.contains("minLength") &&
      value.get<std::string>().size() < schema.at("minLength").get<std::size_t>())
    return path + ": string too short";
  if (value.is_array()) {
    if (schema.contains("minItems") && value.size() < schema.at("minItems").get<std::size_t>())
      return path + ": needs at least " + schema.at("minItems").dump() + " items";
    if (schema.contains("items"))
      for (std::size_t i = 0; i < value.size(); ++i)
        if (auto e = validate_schema(value[i], schema.at("items"), path + "[" + std::to_string(i) + "]")) return e;
  }
  if (value.is_object()) {
    if (schema.contains("required"))
      for (const auto& r : schema.at("required"))
        if (!value.contains(r.get<std::string>())) return path + "." + r.get<std::string>() + ": required field missing";
    const json props = schema.value("properties", json::object());
    for (const auto& [k, v] : value.items()) {
      if (props.contains(k)) {
        if (auto e = validate_schema(v, props.at(k), path + "." + k)) return e;
      } else if (schema.contains("additionalProperties") && schema.at("additionalProperties") == false) {
        return path + "." + k + ": unknown field";
      }
    }
  }
  return std::nullopt;
}

json minimal_instance(const json& schema) {
  if (schema.contains("enum")) return schema.at("enum").at(0);
  auto types = types_of(schema);
  std::string t = types.empty() ? "object" : types.front();
  if (t == "object") {
    json out = json::object();
    if (schema.contains("required"))
      for (const auto& r : schema.at("required")) out[r.get<std::string>()] = minimal_instance(schema.at("properties").at(r.get<std::string>()));
    return out;
  }
  if (t == "array") {
    json out = json::array();
    std::size_t n = schema.value("minItems", std::size_t{0});
    for (std::size_t i = 0; i < n; ++i) out.push_back(minimal_instance(schema.value("items", json::object())));
    return out;
  }
  if (t == "string") return std::string(schema.value("minLength", std::size_t{0}), 'x');
  if (t == "boolean") return false;
  if (t == "integer" || t == "number") {
    if (schema.contains("exclusiveMinimum")) return schema.at("exclusiveMinimum").get<double>() + 1;
    if (schema.contains("minimum")) return schema.at("minimum");
    return 0;
  }
  return nullptr;
}

}  // namespace cesim
