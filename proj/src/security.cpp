#include "hawk/security.hpp"

#include "hawk/util.hpp"

namespace hawk::op {

std::string to_string(Action a) {
  switch (a) {
    case Action::read: return "read";
    case Action::write: return "write";
    case Action::invoke: return "invoke";
  }
  return "unknown";
}

std::optional<Action> action_from_string(const std::string& s) {
  if (s == "read") return Action::read;
  if (s == "write") return Action::write;
  if (s == "invoke") return Action::invoke;
  return std::nullopt;
}

AuthDecision authorize(const std::vector<Capability>& capabilities,
                       const std::string& principal, const std::string& resource_id,
                       Action action, std::int64_t now_ms) {
  static const char* stage_names[] = {"principal", "pattern", "action", "expiry"};
  int best_stage = -1;  // deepest check reached before failing

  for (const auto& cap : capabilities) {
    int stage = 0;
    if (cap.principal != "*" && cap.principal != principal) {
      best_stage = std::max(best_stage, stage);
      continue;
    }
    stage = 1;
    if (!util::glob_match(cap.resource_pattern, resource_id)) {
      best_stage = std::max(best_stage, stage);
      continue;
    }
    stage = 2;
    if (!cap.actions.count(action)) {
      best_stage = std::max(best_stage, stage);
      continue;
    }
    stage = 3;
    if (cap.expires_at_ms && now_ms >= *cap.expires_at_ms) {
      best_stage = std::max(best_stage, stage);
      continue;
    }
    return {true, ""};
  }
  return {false, best_stage < 0 ? "principal" : stage_names[best_stage]};
}

}  // namespace hawk::op
