#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace hawk::op {

enum class Action { read, write, invoke };
std::string to_string(Action a);
std::optional<Action> action_from_string(const std::string& s);

// A grant: principal may perform the listed actions on resources matching
// the glob pattern, until expiry. "*" as principal matches anyone.
struct Capability {
  std::string principal;
  std::string resource_pattern;
  std::set<Action> actions;  // non-empty
  std::optional<std::int64_t> expires_at_ms;
};

struct AuthDecision {
  bool allowed = false;
  std::string denied_by;  // principal | pattern | action | expiry (empty when allowed)
};

// Allow iff some capability passes all four checks, evaluated in order:
// principal, pattern, action, expiry. A denial reports the first failed
// check of the capability that got furthest.
AuthDecision authorize(const std::vector<Capability>& capabilities,
                       const std::string& principal, const std::string& resource_id,
                       Action action, std::int64_t now_ms);

}  // namespace hawk::op
