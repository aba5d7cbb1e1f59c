#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hawk::op {

using json = nlohmann::json;

struct OutputViolation {
  std::string rule;     // missing_field | wrong_type | empty_field | not_in_enum | <semantic>
  std::string message;
};

struct FieldSpec {
  std::string name;
  std::string type = "any";  // string | number | boolean | array | object | any
  bool non_empty = false;    // strings/arrays must not be empty
  std::vector<std::string> enum_values;  // when non-empty, value must be one of these
};

// Semantic rules see the payload plus the current environment document; a
// violation is returned as data. Registered per workflow template.
using SemanticRule =
    std::function<std::optional<OutputViolation>(const json& payload, const json& env)>;

struct OutputSchema {
  std::string name;
  std::vector<FieldSpec> required_fields;
  std::vector<std::pair<std::string, SemanticRule>> semantic_rules;
};

// Returns every violation, structural checks first, then each semantic rule
// independently. Empty result means the payload passed.
std::vector<OutputViolation> validate_output(const OutputSchema& schema, const json& payload,
                                             const json& env = json::object());

// Rule: payload.<field> (array of strings) must be a subset of the string
// set at env.<env_field>; reports each unknown name.
SemanticRule name_set_membership_rule(const std::string& field, const std::string& env_field,
                                      const std::string& violation_tag);

// Rule: payload.<field> must be a number within [lo, hi].
SemanticRule numeric_range_rule(const std::string& field, double lo, double hi);

}  // namespace hawk::op
