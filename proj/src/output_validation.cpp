#include "hawk/output_validation.hpp"

#include <algorithm>
#include <set>

namespace hawk::op {

namespace {

bool type_matches(const json& value, const std::string& type) {
  if (type == "any") return true;
  if (type == "string") return value.is_string();
  if (type == "number") return value.is_number();
  if (type == "boolean") return value.is_boolean();
  if (type == "array") return value.is_array();
  if (type == "object") return value.is_object();
  return false;
}

}  // namespace

std::vector<OutputViolation> validate_output(const OutputSchema& schema, const json& payload,
                                             const json& env) {
  std::vector<OutputViolation> violations;

  if (!payload.is_object()) {
    violations.push_back({"wrong_type", "payload must be a JSON object"});
    return violations;
  }

  for (const auto& field : schema.required_fields) {
    if (!payload.contains(field.name)) {
      violations.push_back({"missing_field", "required field '" + field.name + "' is absent"});
      continue;
    }
    const json& value = payload.at(field.name);
    if (!type_matches(value, field.type)) {
      violations.push_back(
          {"wrong_type", "field '" + field.name + "' is not of type " + field.type});
      continue;
    }
    if (field.non_empty) {
      bool empty = (value.is_string() && value.get_ref<const std::string&>().empty()) ||
                   (value.is_array() && value.empty());
      if (empty)
        violations.push_back({"empty_field", "field '" + field.name + "' must be non-empty"});
    }
    if (!field.enum_values.empty() && value.is_string()) {
      const auto& s = value.get_ref<const std::string&>();
      if (std::find(field.enum_values.begin(), field.enum_values.end(), s) ==
          field.enum_values.end())
        violations.push_back(
            {"not_in_enum", "field '" + field.name + "' value '" + s + "' not allowed"});
    }
  }

  for (const auto& [name, rule] : schema.semantic_rules) {
    if (auto v = rule(payload, env)) violations.push_back(*v);
  }
  return violations;
}

SemanticRule name_set_membership_rule(const std::string& field, const std::string& env_field,
                                      const std::string& violation_tag) {
  return [field, env_field, violation_tag](const json& payload,
                                           const json& env) -> std::optional<OutputViolation> {
    if (!payload.contains(field) || !payload.at(field).is_array()) return std::nullopt;
    std::set<std::string> known;
    if (env.contains(env_field) && env.at(env_field).is_array())
      for (const auto& v : env.at(env_field))
        if (v.is_string()) known.insert(v.get<std::string>());
    std::string unknown;
    for (const auto& v : payload.at(field)) {
      if (!v.is_string()) continue;
      if (!known.count(v.get<std::string>()))
        unknown += (unknown.empty() ? "" : ", ") + v.get<std::string>();
    }
    if (unknown.empty()) return std::nullopt;
    return OutputViolation{violation_tag, "unknown names: " + unknown};
  };
}

SemanticRule numeric_range_rule(const std::string& field, double lo, double hi) {
  return [field, lo, hi](const json& payload, const json&) -> std::optional<OutputViolation> {
    if (!payload.contains(field) || !payload.at(field).is_number()) return std::nullopt;
    double v = payload.at(field).get<double>();
    if (v < lo || v > hi)
      return OutputViolation{"out_of_range", "field '" + field + "' value outside [" +
                                                 std::to_string(lo) + ", " + std::to_string(hi) +
                                                 "]"};
    return std::nullopt;
  };
}

}  // namespace hawk::op
