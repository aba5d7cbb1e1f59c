#pragma once

#include <memory>
#include <string>
#include <vector>

#include "hawk/engine.hpp"
#include "hawk/memory_store.hpp"
#include "hawk/registry.hpp"
#include "hawk/resource.hpp"
#include "hawk/security.hpp"
#include "hawk/version_store.hpp"

namespace hawk::op {

struct TaskPolicy {
  std::string preferred_backend;
  int max_attempts = 1;
  std::int64_t timeout_ms = 30000;
  std::int64_t base_timeout_ms = 30000;  // cap anchor: timeout never exceeds 10x this
};

struct TaskOutcome {
  std::string backend;
  bool ok = false;
  bool timed_out = false;
};

// Deterministic policy feedback: >25% timeouts doubles the timeout (capped
// at 10x base); a backend with >=5 samples and a strictly lower failure
// rate than the preferred one takes over.
TaskPolicy tune(const std::vector<TaskOutcome>& history, const TaskPolicy& current);

// Everything a node body may touch, plus the capability set that guards it.
struct ExecutionContext {
  std::string principal = "engine";
  std::vector<Capability> capabilities;
  VersionStore* version_store = nullptr;
  MemoryStore* memory_store = nullptr;
  agents::Registry* registry = nullptr;
  res::ResourceManager* resources = nullptr;
  engine::EventSink* sink = nullptr;
  std::string node_id;  // current node, for event attribution
};

// Requires (principal, resource, action) to be granted; emits a violation
// event and throws CapabilityDenied otherwise.
void require_capability(const ExecutionContext& ctx, const std::string& resource_id,
                        Action action);

// The shared envelope behind the engine's per-kind dispatch boundaries:
// routes a node to its operator module by operator_kind.
engine::TaskResult dispatch(const model::TaskNode& node, ExecutionContext& ctx);

// Adapts ExecutionContext to the engine's dispatcher boundary.
class Dispatcher : public engine::OperatorDispatcher {
 public:
  explicit Dispatcher(ExecutionContext base) : base_(std::move(base)) {}

  bool resolves(model::OperatorKind) const override { return true; }
  engine::TaskResult run(const model::TaskNode& node, engine::EventSink& sink) override {
    ExecutionContext ctx = base_;
    ctx.sink = &sink;
    ctx.node_id = node.node_id;
    return dispatch(node, ctx);
  }

 private:
  ExecutionContext base_;
};

// Grants everything to every principal; the default for locally-run specs.
std::vector<Capability> open_capabilities();

}  // namespace hawk::op
