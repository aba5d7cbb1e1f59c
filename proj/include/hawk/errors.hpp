#pragma once

#include <stdexcept>
#include <string>

namespace hawk {

// Every recoverable failure in the framework maps to one of these codes.
// Violations found by validators are returned as data, not thrown.
enum class ErrorCode {
  // workflow model
  unrecognized_task_kind,
  malformed_option,
  template_not_found,
  unresolved_placeholder,
  cyclic_spec,
  // engine
  dispatch_unresolvable,
  // versioned store / memory
  key_not_found,
  version_not_found,
  stale_parent,
  // operator layer
  no_agent_found,
  capability_denied,
  operator_timeout,
  unparseable_trace,
  // registry
  invalid_spec,
  duplicate_agent,
  unknown_agent,
  endpoint_unreachable,
  // resource layer
  no_provider,
  auth_missing,
  backend_error,
  rate_limited,
  no_parseable_answers,
  schema_mismatch,
  tool_error,
  // dnf
  non_finite_input,
  no_samples,
  dimension_mismatch,
  empty_dataset,
  no_candidates,
  // creagentive
  missing_file,
  schema_error,
  goal_generation_failed,
  chapter_rejected,
  no_viable_candidates,
  // io / cli
  io_error,
  usage_error,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

// Backend failures carry a class and a retriability hint.
class BackendError : public Error {
 public:
  enum class Class { timeout, http, parse };

  BackendError(Class cls, bool retriable, const std::string& message)
      : Error(ErrorCode::backend_error, message), cls_(cls), retriable_(retriable) {}

  Class error_class() const { return cls_; }
  bool retriable() const { return retriable_; }

 private:
  Class cls_;
  bool retriable_;
};

}  // namespace hawk
