#include "hawk/model.hpp"

// Generated from templates/*.json; test_model.cpp guards against drift.

namespace hawk::model {

namespace {

const char* k_generic_dag = R"__tmpl__({
  "kind": "generic-dag",
  "keywords": ["dag", "workflow", "pipeline"],
  "allow_empty": false,
  "concurrency_cap": 5,
  "parameters": {
    "spec": {"type": "string"}
  },
  "constraints": [],
  "nodes": [],
  "nodes_from_param": "spec"
})__tmpl__";

const char* k_novel_generation = R"__tmpl__({
  "kind": "novel-generation",
  "keywords": ["novel", "story", "storyline", "chapters"],
  "allow_empty": false,
  "concurrency_cap": 5,
  "parameters": {
    "project_dir": {"type": "string", "default": "."},
    "outline_path": {"type": "string", "default": "outline.json", "extract_regex": "(\\S+\\.json)"},
    "backend": {"type": "string", "default": "mock"},
    "n_candidates": {"type": "int", "default": 3},
    "max_chapters": {"type": "int", "default": 50},
    "seed": {"type": "int", "default": 0}
  },
  "constraints": [],
  "nodes": [
    {
      "node_id": "load-env",
      "operator_kind": "environment",
      "params": {"step": "load-env", "project_dir": "${project_dir}"},
      "depends_on": [],
      "retry_policy": {"max_attempts": 1, "backoff_base": 0, "backoff_factor": 1.0}
    },
    {
      "node_id": "gen-goals",
      "operator_kind": "reasoning",
      "params": {"step": "gen-goals", "backend": "${backend}"},
      "depends_on": ["load-env"],
      "retry_policy": {"max_attempts": 2, "backoff_base": 1, "backoff_factor": 2.0}
    },
    {
      "node_id": "gen-candidates",
      "operator_kind": "reasoning",
      "params": {
        "step": "gen-candidates",
        "backend": "${backend}",
        "n_candidates": "${n_candidates}",
        "seed": "${seed}"
      },
      "depends_on": ["gen-goals"],
      "retry_policy": {"max_attempts": 2, "backoff_base": 1, "backoff_factor": 2.0}
    },
    {
      "node_id": "decide",
      "operator_kind": "task-management",
      "params": {"step": "decide", "capability": "select-trajectory"},
      "depends_on": ["gen-candidates"],
      "retry_policy": {"max_attempts": 1, "backoff_base": 0, "backoff_factor": 1.0}
    },
    {
      "node_id": "write",
      "operator_kind": "task-management",
      "params": {"step": "write", "capability": "write-chapter", "backend": "${backend}"},
      "depends_on": ["decide"],
      "retry_policy": {"max_attempts": 1, "backoff_base": 0, "backoff_factor": 1.0}
    },
    {
      "node_id": "commit",
      "operator_kind": "environment",
      "params": {"step": "commit"},
      "depends_on": ["write"],
      "retry_policy": {"max_attempts": 1, "backoff_base": 0, "backoff_factor": 1.0}
    },
    {
      "node_id": "ending-check",
      "operator_kind": "task-management",
      "params": {"step": "ending-check", "capability": "check-ending", "backend": "${backend}"},
      "depends_on": ["commit"],
      "retry_policy": {"max_attempts": 2, "backoff_base": 1, "backoff_factor": 2.0}
    }
  ]
})__tmpl__";

}  // namespace

TemplateCatalog TemplateCatalog::builtin() {
  TemplateCatalog catalog;
  catalog.add(template_from_json(json::parse(k_generic_dag)));
  catalog.add(template_from_json(json::parse(k_novel_generation)));
  return catalog;
}

}  // namespace hawk::model
