#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "hawk/model.hpp"

namespace hawk::engine {

using json = nlohmann::json;

enum class NodeStatus { pending, ready, running, succeeded, failed, cancelled };
std::string to_string(NodeStatus s);

enum class EventKind {
  scheduled,
  started,
  succeeded,
  failed,
  retried,
  cancelled,
  validated,
  violation,
};
std::string to_string(EventKind k);
std::optional<EventKind> event_kind_from_string(const std::string& s);

struct ExecutionEvent {
  std::int64_t seq = 0;  // strictly increasing within an instance
  std::int64_t ts_ms = 0;
  std::string node_id;
  EventKind kind = EventKind::scheduled;
  std::map<std::string, std::string> payload;

  json to_json() const;
};

struct NodeState {
  NodeStatus status = NodeStatus::pending;
  int attempts = 0;
  std::optional<std::int64_t> started_at_ms;
  std::optional<std::int64_t> ended_at_ms;
  std::optional<std::string> last_error;
};

struct StrategyParams {
  int parallelism = 1;       // >= 1, <= concurrency_cap
  int retry_budget = 0;      // extra attempts grantable beyond node policy
  double backoff_scale = 1.0;  // > 0
  int concurrency_cap = 5;
};

struct WorkflowInstance {
  std::string instance_id;
  model::WorkflowSpec spec;
  std::map<std::string, NodeState> node_states;
  StrategyParams strategy;
  std::vector<ExecutionEvent> event_log;  // append-only

  bool terminal() const;
};

WorkflowInstance make_instance(model::WorkflowSpec spec, StrategyParams strategy,
                               std::string instance_id = {});

struct PlannerOutput {
  std::vector<std::vector<std::string>> stages;  // lexicographic within a stage
  std::map<std::string, int> order_index;

  json to_json() const;
};

// Minimal-depth stage decomposition: stage = 1 + max stage of dependencies.
PlannerOutput plan(const model::WorkflowSpec& spec);

struct TaskResult {
  bool ok = false;
  json output;  // operator-defined document
  std::map<std::string, std::string> metrics;
  std::string error;        // set when !ok
  std::string error_class;  // short classifier for the event payload
};

// Node bodies report mid-task events (validations, violations, op-level
// retries) through this; the engine serializes them into the instance log.
class EventSink {
 public:
  virtual ~EventSink() = default;
  virtual void emit(const std::string& node_id, EventKind kind,
                    std::map<std::string, std::string> payload) = 0;
};

// Boundary the engine dispatches node work through (one envelope for the six
// operator modules, discriminated by TaskNode::operator_kind).
class OperatorDispatcher {
 public:
  virtual ~OperatorDispatcher() = default;
  virtual bool resolves(model::OperatorKind kind) const = 0;
  virtual TaskResult run(const model::TaskNode& node, EventSink& sink) = 0;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual std::int64_t now_ms() = 0;
};

class SystemClock : public Clock {
 public:
  std::int64_t now_ms() override;
};

struct WorkflowResult {
  bool all_succeeded = false;
  std::map<std::string, std::string> node_failures;  // node_id -> error
};

// Runs the instance to a terminal state. Dependency-respecting, at most
// strategy.parallelism node bodies in flight, per-node retry with seeded
// full-jitter exponential backoff. Failed nodes cancel their strict
// descendants; independent subgraphs keep running.
WorkflowResult execute(WorkflowInstance& instance, OperatorDispatcher& dispatcher,
                       Clock& clock, std::uint64_t rng_seed);

struct NodeMetrics {
  NodeStatus status = NodeStatus::pending;
  int attempts = 0;
  std::optional<std::int64_t> latency_ms;
};

struct MetricsSummary {
  std::map<std::string, NodeMetrics> per_node;
  std::map<std::string, int> status_counts;
  double failure_rate = 0.0;           // failed / completions, all history
  double trailing_failure_rate = 0.0;  // over the last 20 completions
  std::optional<std::int64_t> p50_latency_ms;
  std::optional<std::int64_t> p95_latency_ms;
  int completions = 0;

  json to_json() const;
};

// Pure function of the event log.
MetricsSummary monitor_snapshot(const WorkflowInstance& instance);

inline constexpr double kFailureRateHigh = 0.2;
inline constexpr double kFailureRateLow = 0.05;
inline constexpr int kTrailingWindow = 20;
inline constexpr double kBackoffScaleCap = 8.0;

// Deterministic feedback rule over the trailing completion window.
StrategyParams optimize(const MetricsSummary& metrics, const StrategyParams& current);

// One event per line, fields exactly {seq, ts, node_id, kind, payload}.
std::string to_ndjson(const std::vector<ExecutionEvent>& log);
std::vector<ExecutionEvent> events_from_ndjson(const std::string& text);

}  // namespace hawk::engine
