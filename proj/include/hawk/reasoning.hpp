#pragma once

#include <string>
#include <vector>

#include "hawk/engine.hpp"
#include "hawk/resource.hpp"

namespace hawk::op {

struct ReasoningInput {
  std::string question;  // first line doubles as the mock prompt tag
  std::vector<std::string> evidence;
  std::string mode = "cot";
};

struct ReasoningTrace {
  std::vector<std::string> steps;
  std::string answer;
  std::string raw;
};

// Fixed request suffix; deterministic mocks and real backends share it.
inline constexpr const char* kCotSuffix =
    "Respond with numbered steps, then a line 'ANSWER: <answer>'.";

// Grammar: lines matching ^\d+\.\s are steps (prefix stripped); the first
// line matching ^ANSWER:\s ends parsing. Returns false when no answer line
// was found.
bool parse_cot_trace(const std::string& raw, ReasoningTrace& out);

// Issues the structured prompt and parses the trace. One retry (seed bumped)
// when the answer marker is absent; then UnparseableTrace. When a sink is
// given, the retry is surfaced as a violation + retried event pair.
ReasoningTrace reason(const ReasoningInput& input, res::ResourceHandle& backend,
                      const res::GenerationParams& params = {},
                      engine::EventSink* sink = nullptr, const std::string& node_id = {});

}  // namespace hawk::op
