#pragma once
// Validator for the JSON Schema subset used by tool descriptors: type,
// properties, required, additionalProperties (boolean), items, enum,
// minimum, exclusiveMinimum, minItems, minLength.

#include <nlohmann/json.hpp>

#include <optional>
#include <string>

namespace cesim {

// First violation as "<path>: <reason>", or nullopt when valid.
std::optional<std::string> validate_schema(const nlohmann::json& value, const nlohmann::json& schema,
                                           const std::string& path = "$");

// A minimal instance satisfying the schema: required members only, each at
// its smallest valid value. Used by the schema fuzz tests.
nlohmann::json minimal_instance(const nlohmann::json& schema);

}  // namespace cesim
