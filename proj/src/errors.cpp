#include "hawk/errors.hpp"

namespace hawk {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::unrecognized_task_kind: return "UnrecognizedTaskKind";
    case ErrorCode::malformed_option: return "MalformedOption";
    case ErrorCode::template_not_found: return "TemplateNotFound";
    case ErrorCode::unresolved_placeholder: return "UnresolvedPlaceholder";
    case ErrorCode::cyclic_spec: return "CyclicSpec";
    case ErrorCode::dispatch_unresolvable: return "DispatchUnresolvable";
    case ErrorCode::key_not_found: return "KeyNotFound";
    case ErrorCode::version_not_found: return "VersionNotFound";
    case ErrorCode::stale_parent: return "StaleParent";
    case ErrorCode::no_agent_found: return "NoAgentFound";
    case ErrorCode::capability_denied: return "CapabilityDenied";
    case ErrorCode::operator_timeout: return "OperatorTimeout";
    case ErrorCode::unparseable_trace: return "UnparseableTrace";
    case ErrorCode::invalid_spec: return "InvalidSpec";
    case ErrorCode::duplicate_agent: return "DuplicateAgent";
    case ErrorCode::unknown_agent: return "UnknownAgent";
    case ErrorCode::endpoint_unreachable: return "EndpointUnreachable";
    case ErrorCode::no_provider: return "NoProvider";
    case ErrorCode::auth_missing: return "AuthMissing";
    case ErrorCode::backend_error: return "BackendError";
    case ErrorCode::rate_limited: return "RateLimited";
    case ErrorCode::no_parseable_answers: return "NoParseableAnswers";
    case ErrorCode::schema_mismatch: return "SchemaMismatch";
    case ErrorCode::tool_error: return "ToolError";
    case ErrorCode::non_finite_input: return "NonFiniteInput";
    case ErrorCode::no_samples: return "NoSamples";
    case ErrorCode::dimension_mismatch: return "DimensionMismatch";
    case ErrorCode::empty_dataset: return "EmptyDataset";
    case ErrorCode::no_candidates: return "NoCandidates";
    case ErrorCode::missing_file: return "MissingFile";
    case ErrorCode::schema_error: return "SchemaError";
    case ErrorCode::goal_generation_failed: return "GoalGenerationFailed";
    case ErrorCode::chapter_rejected: return "ChapterRejected";
    case ErrorCode::no_viable_candidates: return "NoViableCandidates";
    case ErrorCode::io_error: return "IoError";
    case ErrorCode::usage_error: return "UsageError";
  }
  return "UnknownError";
}

}  // namespace hawk
