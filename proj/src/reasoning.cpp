#include "hawk/reasoning.hpp"

#include <sstream>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::op {

bool parse_cot_trace(const std::string& raw, ReasoningTrace& out) {
  out.steps.clear();
  out.answer.clear();
  out.raw = raw;

  std::istringstream in(raw);
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.rfind("ANSWER:", 0) == 0 && line.size() > 7 &&
        std::isspace(static_cast<unsigned char>(line[7]))) {
      out.answer = util::trim(line.substr(7));
      return true;
    }
    std::size_t i = 0;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i > 0 && i + 1 < line.size() && line[i] == '.' &&
        std::isspace(static_cast<unsigned char>(line[i + 1]))) {
      out.steps.push_back(util::trim(line.substr(i + 2)));
    }
  }
  return false;
}

ReasoningTrace reason(const ReasoningInput& input, res::ResourceHandle& backend,
                      const res::GenerationParams& params, engine::EventSink* sink,
                      const std::string& node_id) {
  std::string prompt = input.question;
  for (const auto& e : input.evidence) prompt += "\nEVIDENCE: " + e;
  prompt += "\n";
  prompt += kCotSuffix;

  std::string tag = input.question.substr(0, input.question.find('\n'));
  res::GenerationParams p = params;
  for (int attempt = 0; attempt < 2; ++attempt) {
    auto result = backend.generate(prompt, p);
    const auto& completion = std::get<res::Completion>(result);
    ReasoningTrace trace;
    if (parse_cot_trace(completion.text, trace)) return trace;
    if (attempt == 0) {
      if (sink) {
        sink->emit(node_id, engine::EventKind::violation,
                   {{"error_class", "unparseable_trace"}, {"tag", tag}});
        sink->emit(node_id, engine::EventKind::retried,
                   {{"error_class", "unparseable_trace"}, {"tag", tag}, {"scope", "op"}});
      }
      p.seed = p.seed.value_or(0) + 1;  // a fresh sample, reproducibly
    }
  }
  throw Error(ErrorCode::unparseable_trace, "no ANSWER line after retry: " + tag);
}

}  // namespace hawk::op
