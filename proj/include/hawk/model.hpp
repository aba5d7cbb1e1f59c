#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace hawk::model {

using json = nlohmann::json;

// The six operator-layer execution modules a task node can target.
enum class OperatorKind {
  environment,
  memory,
  task_management,
  task_optimizer,
  reasoning,
  security,
};

std::string to_string(OperatorKind kind);
std::optional<OperatorKind> operator_kind_from_string(const std::string& s);

struct RetryPolicy {
  int max_attempts = 1;          // >= 1
  std::int64_t backoff_base_ms = 0;
  double backoff_factor = 1.0;   // >= 1
};

struct TaskRequest {
  std::string raw_text;
  std::map<std::string, std::string> options;
};

struct TaskSpec {
  std::string task_id;
  std::string kind;
  json parameters;  // object: name -> typed value
  std::vector<std::string> constraints;

  json to_json() const;
};

struct TaskNode {
  std::string node_id;
  OperatorKind operator_kind = OperatorKind::task_management;
  json params;  // object
  std::vector<std::string> depends_on;
  RetryPolicy retry_policy;
};

struct WorkflowSpec {
  std::string spec_id;
  std::vector<TaskNode> nodes;
  std::map<std::string, std::string> metadata;
  int concurrency_cap = 5;

  const TaskNode* find_node(const std::string& node_id) const;
  json to_json() const;
};

struct Violation {
  std::string kind;     // cycle | duplicate_id | dangling_dependency | bad_field
  std::string message;
  std::vector<std::string> nodes;
};

struct ValidationReport {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  json to_json() const;
};

// One workflow template: keyword table for request parsing, declared
// parameters with defaults, and the node graph with ${param} placeholders.
struct WorkflowTemplate {
  struct ParamSpec {
    std::string type;  // string | int | real | bool
    json default_value;             // null when absent
    std::string extract_regex;      // empty when absent
    bool required = false;
  };

  std::string kind;
  std::vector<std::string> keywords;
  std::map<std::string, ParamSpec> parameters;
  std::vector<std::string> constraints;
  std::vector<TaskNode> nodes;
  int concurrency_cap = 5;
  bool allow_empty = false;
  std::string nodes_from_param;  // when set, nodes are loaded from the file
                                 // named by this parameter
};

class TemplateCatalog {
 public:
  void add(WorkflowTemplate tmpl);
  const WorkflowTemplate* find(const std::string& kind) const;
  std::vector<std::string> kinds() const;  // sorted

  // Loads every *.json file in dir as one template.
  static TemplateCatalog load_dir(const std::filesystem::path& dir);
  // The catalog shipped with the framework (novel-generation, generic-dag).
  static TemplateCatalog builtin();

 private:
  std::map<std::string, WorkflowTemplate> templates_;
};

// User Layer: resolve a free-form request to a normalized task.
TaskSpec parse_task_request(const TaskRequest& req, const TemplateCatalog& catalog);

// Select the template for spec_req.kind and substitute parameters into it.
WorkflowSpec instantiate_workflow(const TaskSpec& spec_req, const TemplateCatalog& catalog);

// Structural checks: duplicate ids, dangling depends_on, cycles (with the
// cycle's node sequence). Violations are data, not errors.
ValidationReport validate_workflow(const WorkflowSpec& spec);

// Workflow spec file schema. Unknown keys are rejected.
WorkflowSpec workflow_spec_from_json(const json& doc);
WorkflowSpec load_workflow_spec(const std::filesystem::path& file);

WorkflowTemplate template_from_json(const json& doc);

}  // namespace hawk::model
