#include "hawk/engine.hpp"

#include <algorithm>
#include <cmath>
#include <condition_variable>
#include <deque>
#include <mutex>
#include <queue>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::engine {

std::string to_string(NodeStatus s) {
  switch (s) {
    case NodeStatus::pending: return "pending";
    case NodeStatus::ready: return "ready";
    case NodeStatus::running: return "running";
    case NodeStatus::succeeded: return "succeeded";
    case NodeStatus::failed: return "failed";
    case NodeStatus::cancelled: return "cancelled";
  }
  return "unknown";
}

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::scheduled: return "scheduled";
    case EventKind::started: return "started";
    case EventKind::succeeded: return "succeeded";
    case EventKind::failed: return "failed";
    case EventKind::retried: return "retried";
    case EventKind::cancelled: return "cancelled";
    case EventKind::validated: return "validated";
    case EventKind::violation: return "violation";
  }
  return "unknown";
}

std::optional<EventKind> event_kind_from_string(const std::string& s) {
  static const std::map<std::string, EventKind> table = {
      {"scheduled", EventKind::scheduled}, {"started", EventKind::started},
      {"succeeded", EventKind::succeeded}, {"failed", EventKind::failed},
      {"retried", EventKind::retried},     {"cancelled", EventKind::cancelled},
      {"validated", EventKind::validated}, {"violation", EventKind::violation}};
  auto it = table.find(s);
  if (it == table.end()) return std::nullopt;
  return it->second;
}

json ExecutionEvent::to_json() const {
  return json{{"seq", seq},
              {"ts", ts_ms},
              {"node_id", node_id},
              {"kind", to_string(kind)},
              {"payload", payload}};
}

bool WorkflowInstance::terminal() const {
  for (const auto& [_, st] : node_states) {
    if (st.status != NodeStatus::succeeded && st.status != NodeStatus::failed &&
        st.status != NodeStatus::cancelled)
      return false;
  }
  return true;
}

WorkflowInstance make_instance(model::WorkflowSpec spec, StrategyParams strategy,
                               std::string instance_id) {
  if (strategy.parallelism < 1) strategy.parallelism = 1;
  strategy.concurrency_cap = spec.concurrency_cap;
  if (strategy.parallelism > spec.concurrency_cap)
    strategy.parallelism = spec.concurrency_cap;

  WorkflowInstance instance;
  instance.instance_id = instance_id.empty() ? "inst-" + spec.spec_id : std::move(instance_id);
  for (const auto& n : spec.nodes) instance.node_states[n.node_id] = NodeState{};
  instance.spec = std::move(spec);
  instance.strategy = strategy;
  return instance;
}

std::int64_t SystemClock::now_ms() { return util::now_ms(); }

// --- planner ----------------------------------------------------------------

json PlannerOutput::to_json() const {
  return json{{"stages", stages}, {"order_index", order_index}};
}

PlannerOutput plan(const model::WorkflowSpec& spec) {
  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, int> indegree;
  for (const auto& n : spec.nodes) indegree[n.node_id] = 0;
  for (const auto& n : spec.nodes) {
    for (const auto& dep : n.depends_on) {
      children[dep].push_back(n.node_id);
      indegree[n.node_id]++;
    }
  }

  PlannerOutput out;
  std::set<std::string> frontier;
  for (const auto& [id, deg] : indegree)
    if (deg == 0) {
      frontier.insert(id);
      out.order_index[id] = 0;
    }

  std::size_t placed = 0;
  std::set<std::string> queue = frontier;
  while (!queue.empty()) {
    std::string id = *queue.begin();
    queue.erase(queue.begin());
    ++placed;
    int stage = out.order_index[id];
    for (const auto& child : children[id]) {
      out.order_index[child] = std::max(out.order_index[child], stage + 1);
      if (--indegree[child] == 0) queue.insert(child);
    }
  }
  if (placed != spec.nodes.size())
    throw Error(ErrorCode::cyclic_spec, "spec '" + spec.spec_id + "' contains a cycle");

  int depth = 0;
  for (const auto& [_, s] : out.order_index) depth = std::max(depth, s);
  out.stages.assign(static_cast<std::size_t>(depth) + 1, {});
  for (const auto& [id, s] : out.order_index) out.stages[s].push_back(id);
  for (auto& stage : out.stages) std::sort(stage.begin(), stage.end());
  if (spec.nodes.empty()) out.stages.clear();
  return out;
}

// --- executor ----------------------------------------------------------------

namespace {

struct Completion {
  std::string node_id;
  TaskResult result;
  std::int64_t latency_ms = 0;
};

struct SinkEvent {
  std::string node_id;
  EventKind kind;
  std::map<std::string, std::string> payload;
};

// Single shared queue; the engine loop is the only consumer and the only
// writer of the event log.
class EngineQueues : public EventSink {
 public:
  void emit(const std::string& node_id, EventKind kind,
            std::map<std::string, std::string> payload) override {
    {
      std::lock_guard lock(mu_);
      sink_events_.push_back({node_id, kind, std::move(payload)});
    }
    cv_.notify_all();
  }

  void push_completion(Completion c) {
    {
      std::lock_guard lock(mu_);
      completions_.push_back(std::move(c));
    }
    cv_.notify_all();
  }

  // Drains everything currently queued; blocks up to wait_ms when empty.
  void drain(std::vector<SinkEvent>& events, std::vector<Completion>& completions,
             std::int64_t wait_ms) {
    std::unique_lock lock(mu_);
    if (sink_events_.empty() && completions_.empty() && wait_ms > 0) {
      cv_.wait_for(lock, std::chrono::milliseconds(wait_ms),
                   [&] { return !sink_events_.empty() || !completions_.empty(); });
    }
    events.assign(sink_events_.begin(), sink_events_.end());
    sink_events_.clear();
    completions.assign(completions_.begin(), completions_.end());
    completions_.clear();
  }

 private:
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<SinkEvent> sink_events_;
  std::deque<Completion> completions_;
};

class WorkerPool {
 public:
  WorkerPool(int size, OperatorDispatcher& dispatcher, EngineQueues& queues, Clock& clock)
      : dispatcher_(dispatcher), queues_(queues), clock_(clock) {
    for (int i = 0; i < size; ++i) workers_.emplace_back([this] { loop(); });
  }

  ~WorkerPool() {
    {
      std::lock_guard lock(mu_);
      stopping_ = true;
    }
    cv_.notify_all();
    for (auto& w : workers_) w.join();
  }

  void submit(const model::TaskNode* node) {
    {
      std::lock_guard lock(mu_);
      jobs_.push_back(node);
    }
    cv_.notify_one();
  }

 private:
  void loop() {
    while (true) {
      const model::TaskNode* node = nullptr;
      {
        std::unique_lock lock(mu_);
        cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
        if (stopping_ && jobs_.empty()) return;
        node = jobs_.front();
        jobs_.pop_front();
      }
      auto t0 = clock_.now_ms();
      TaskResult result;
      try {
        result = dispatcher_.run(*node, queues_);
      } catch (const Error& e) {
        result.ok = false;
        result.error = e.what();
        result.error_class = to_string(e.code());
      } catch (const std::exception& e) {
        result.ok = false;
        result.error = e.what();
        result.error_class = "exception";
      }
      queues_.push_completion({node->node_id, std::move(result), clock_.now_ms() - t0});
    }
  }

  OperatorDispatcher& dispatcher_;
  EngineQueues& queues_;
  Clock& clock_;
  std::mutex mu_;
  std::condition_variable cv_;
  std::deque<const model::TaskNode*> jobs_;
  std::vector<std::thread> workers_;
  bool stopping_ = false;
};

}  // namespace

WorkflowResult execute(WorkflowInstance& instance, OperatorDispatcher& dispatcher,
                       Clock& clock, std::uint64_t rng_seed) {
  const auto& spec = instance.spec;
  for (const auto& [id, st] : instance.node_states) {
    if (st.status != NodeStatus::pending)
      throw Error(ErrorCode::schema_error,
                  "instance is not fresh: node '" + id + "' is " + to_string(st.status));
  }
  for (const auto& n : spec.nodes) {
    if (!dispatcher.resolves(n.operator_kind))
      throw Error(ErrorCode::dispatch_unresolvable,
                  "no operator for kind '" + model::to_string(n.operator_kind) + "'");
  }

  std::map<std::string, std::vector<std::string>> children;
  std::map<std::string, int> waiting_on;
  for (const auto& n : spec.nodes) {
    waiting_on[n.node_id] = static_cast<int>(n.depends_on.size());
    for (const auto& dep : n.depends_on) children[dep].push_back(n.node_id);
  }

  std::map<std::string, std::mt19937_64> node_rng;
  for (const auto& n : spec.nodes)
    node_rng.emplace(n.node_id, std::mt19937_64(rng_seed ^ util::fnv1a64(n.node_id)));

  std::int64_t next_seq = 1;
  auto append_event = [&](const std::string& node_id, EventKind kind,
                          std::map<std::string, std::string> payload) {
    instance.event_log.push_back(
        {next_seq++, clock.now_ms(), node_id, kind, std::move(payload)});
  };

  // Ready nodes ordered by (not-before time, node id) so draining is
  // deterministic for a fixed completion order.
  struct ReadyEntry {
    std::int64_t not_before_ms;
    std::string node_id;
    bool operator>(const ReadyEntry& o) const {
      return std::tie(not_before_ms, node_id) > std::tie(o.not_before_ms, o.node_id);
    }
  };
  std::priority_queue<ReadyEntry, std::vector<ReadyEntry>, std::greater<>> ready;

  auto mark_ready = [&](const std::string& id, std::int64_t not_before_ms) {
    instance.node_states[id].status = NodeStatus::ready;
    ready.push({not_before_ms, id});
  };

  for (const auto& n : spec.nodes) {
    if (n.depends_on.empty()) {
      append_event(n.node_id, EventKind::scheduled, {});
      mark_ready(n.node_id, 0);
    }
  }

  // Cancels every strict descendant that is not already terminal.
  auto cancel_descendants = [&](const std::string& root) {
    std::deque<std::string> frontier(children[root].begin(), children[root].end());
    std::set<std::string> seen;
    while (!frontier.empty()) {
      std::string id = frontier.front();
      frontier.pop_front();
      if (!seen.insert(id).second) continue;
      auto& st = instance.node_states[id];
      if (st.status == NodeStatus::pending || st.status == NodeStatus::ready) {
        st.status = NodeStatus::cancelled;
        st.ended_at_ms = clock.now_ms();
        append_event(id, EventKind::cancelled, {{"cause", root}});
      }
      for (const auto& c : children[id]) frontier.push_back(c);
    }
  };

  EngineQueues queues;
  int pool_size = std::min(instance.strategy.parallelism,
                           static_cast<int>(std::max<std::size_t>(spec.nodes.size(), 1)));
  WorkerPool pool(pool_size, dispatcher, queues, clock);

  int running = 0;
  int remaining = 0;
  for (const auto& [_, st] : instance.node_states)
    if (st.status != NodeStatus::cancelled) ++remaining;

  while (remaining > 0) {
    // Launch everything due, up to the parallelism bound.
    std::int64_t now = clock.now_ms();
    while (running < instance.strategy.parallelism && !ready.empty()) {
      ReadyEntry entry = ready.top();
      if (entry.not_before_ms > now) break;  // queue is time-ordered
      ready.pop();
      auto& st = instance.node_states[entry.node_id];
      if (st.status != NodeStatus::ready) continue;  // cancelled meanwhile
      st.status = NodeStatus::running;
      st.attempts += 1;
      if (!st.started_at_ms) st.started_at_ms = now;
      append_event(entry.node_id, EventKind::started,
                   {{"attempt", std::to_string(st.attempts)}});
      pool.submit(spec.find_node(entry.node_id));
      ++running;
    }

    std::int64_t wait_ms = 50;
    if (!ready.empty() && running < instance.strategy.parallelism) {
      wait_ms = std::max<std::int64_t>(1, ready.top().not_before_ms - clock.now_ms());
    } else if (running == 0 && ready.empty()) {
      break;  // nothing running, nothing scheduled: blocked nodes remain
    }

    std::vector<SinkEvent> sink_events;
    std::vector<Completion> completions;
    queues.drain(sink_events, completions, running > 0 || !ready.empty() ? wait_ms : 0);

    for (auto& ev : sink_events)
      append_event(ev.node_id, ev.kind, std::move(ev.payload));

    for (auto& done : completions) {
      --running;
      auto& st = instance.node_states[done.node_id];
      const auto* node = spec.find_node(done.node_id);
      if (done.result.ok) {
        st.status = NodeStatus::succeeded;
        st.ended_at_ms = clock.now_ms();
        --remaining;
        append_event(done.node_id, EventKind::succeeded,
                     {{"attempt", std::to_string(st.attempts)},
                      {"latency_ms", std::to_string(done.latency_ms)}});
        for (const auto& child : children[done.node_id]) {
          if (--waiting_on[child] == 0 &&
              instance.node_states[child].status == NodeStatus::pending) {
            append_event(child, EventKind::scheduled, {});
            mark_ready(child, 0);
          }
        }
      } else {
        st.last_error = done.result.error;
        if (st.attempts < node->retry_policy.max_attempts) {
          double base = static_cast<double>(node->retry_policy.backoff_base_ms) *
                        std::pow(node->retry_policy.backoff_factor, st.attempts - 1) *
                        instance.strategy.backoff_scale;
          std::uniform_real_distribution<double> jitter(0.0, std::max(base, 0.0));
          auto delay = static_cast<std::int64_t>(jitter(node_rng.at(done.node_id)));
          append_event(done.node_id, EventKind::retried,
                       {{"attempt", std::to_string(st.attempts)},
                        {"error", done.result.error},
                        {"error_class", done.result.error_class},
                        {"backoff_ms", std::to_string(delay)}});
          mark_ready(done.node_id, clock.now_ms() + delay);
        } else {
          st.status = NodeStatus::failed;
          st.ended_at_ms = clock.now_ms();
          --remaining;
          append_event(done.node_id, EventKind::failed,
                       {{"attempt", std::to_string(st.attempts)},
                        {"error", done.result.error},
                        {"error_class", done.result.error_class},
                        {"latency_ms", std::to_string(done.latency_ms)}});
          cancel_descendants(done.node_id);
          remaining = 0;
          for (const auto& [id, s] : instance.node_states)
            if (s.status != NodeStatus::succeeded && s.status != NodeStatus::failed &&
                s.status != NodeStatus::cancelled)
              ++remaining;
        }
      }
    }
  }

  // Anything still pending had an unsatisfiable dependency (failed parent
  // handled above; this is defensive for disconnected anomalies).
  for (auto& [id, st] : instance.node_states) {
    if (st.status == NodeStatus::pending || st.status == NodeStatus::ready) {
      st.status = NodeStatus::cancelled;
      append_event(id, EventKind::cancelled, {{"cause", "unreachable"}});
    }
  }

  WorkflowResult result;
  result.all_succeeded = true;
  for (const auto& [id, st] : instance.node_states) {
    if (st.status != NodeStatus::succeeded) {
      result.all_succeeded = false;
      if (st.status == NodeStatus::failed)
        result.node_failures[id] = st.last_error.value_or("failed");
    }
  }
  return result;
}

// --- monitoring ---------------------------------------------------------------

json MetricsSummary::to_json() const {
  json nodes = json::object();
  for (const auto& [id, nm] : per_node) {
    json j{{"status", to_string(nm.status)}, {"attempts", nm.attempts}};
    if (nm.latency_ms) j["latency_ms"] = *nm.latency_ms;
    nodes[id] = j;
  }
  json out{{"per_node", nodes},
           {"status_counts", status_counts},
           {"failure_rate", failure_rate},
           {"trailing_failure_rate", trailing_failure_rate},
           {"completions", completions}};
  if (p50_latency_ms) out["p50_latency_ms"] = *p50_latency_ms;
  if (p95_latency_ms) out["p95_latency_ms"] = *p95_latency_ms;
  return out;
}

namespace {

std::int64_t nearest_rank(std::vector<std::int64_t>& sorted_values, double pct) {
  std::size_t n = sorted_values.size();
  std::size_t rank = static_cast<std::size_t>(std::ceil(pct / 100.0 * static_cast<double>(n)));
  if (rank == 0) rank = 1;
  return sorted_values[rank - 1];
}

}  // namespace

MetricsSummary monitor_snapshot(const WorkflowInstance& instance) {
  MetricsSummary summary;
  for (const auto& [id, _] : instance.node_states) summary.per_node[id] = {};

  struct CompletionMark {
    std::int64_t seq;
    bool failed;
  };
  std::vector<CompletionMark> completion_order;
  std::vector<std::int64_t> latencies;

  for (const auto& ev : instance.event_log) {
    auto& nm = summary.per_node[ev.node_id];
    switch (ev.kind) {
      case EventKind::scheduled:
        if (nm.status == NodeStatus::pending) nm.status = NodeStatus::ready;
        break;
      case EventKind::started:
        nm.status = NodeStatus::running;
        nm.attempts += 1;
        break;
      case EventKind::retried:
        nm.status = NodeStatus::ready;
        break;
      case EventKind::succeeded:
      case EventKind::failed: {
        nm.status = ev.kind == EventKind::succeeded ? NodeStatus::succeeded : NodeStatus::failed;
        auto it = ev.payload.find("latency_ms");
        if (it != ev.payload.end()) {
          nm.latency_ms = std::stoll(it->second);
          latencies.push_back(*nm.latency_ms);
        }
        completion_order.push_back({ev.seq, ev.kind == EventKind::failed});
        break;
      }
      case EventKind::cancelled:
        nm.status = NodeStatus::cancelled;
        break;
      case EventKind::validated:
      case EventKind::violation:
        break;
    }
  }

  for (const auto& [_, nm] : summary.per_node)
    summary.status_counts[to_string(nm.status)] += 1;

  summary.completions = static_cast<int>(completion_order.size());
  if (!completion_order.empty()) {
    int failed = 0;
    for (const auto& c : completion_order) failed += c.failed ? 1 : 0;
    summary.failure_rate = static_cast<double>(failed) / completion_order.size();

    std::size_t window = std::min<std::size_t>(completion_order.size(), kTrailingWindow);
    int trailing_failed = 0;
    for (std::size_t i = completion_order.size() - window; i < completion_order.size(); ++i)
      trailing_failed += completion_order[i].failed ? 1 : 0;
    summary.trailing_failure_rate = static_cast<double>(trailing_failed) / window;
  }

  if (!latencies.empty()) {
    std::sort(latencies.begin(), latencies.end());
    summary.p50_latency_ms = nearest_rank(latencies, 50.0);
    summary.p95_latency_ms = nearest_rank(latencies, 95.0);
  }
  return summary;
}

StrategyParams optimize(const MetricsSummary& metrics, const StrategyParams& current) {
  StrategyParams next = current;
  if (metrics.trailing_failure_rate > kFailureRateHigh) {
    next.parallelism = std::max(1, current.parallelism / 2);
    next.backoff_scale = std::min(kBackoffScaleCap, current.backoff_scale * 2.0);
  } else if (metrics.trailing_failure_rate < kFailureRateLow &&
             current.parallelism < current.concurrency_cap) {
    next.parallelism = current.parallelism + 1;
  }
  return next;
}

// --- event log serialization ----------------------------------------------------

std::string to_ndjson(const std::vector<ExecutionEvent>& log) {
  std::string out;
  for (const auto& ev : log) {
    out += ev.to_json().dump();
    out += '\n';
  }
  return out;
}

std::vector<ExecutionEvent> events_from_ndjson(const std::string& text) {
  std::vector<ExecutionEvent> events;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (util::trim(line).empty()) continue;
    json j = json::parse(line);
    ExecutionEvent ev;
    ev.seq = j.at("seq").get<std::int64_t>();
    ev.ts_ms = j.at("ts").get<std::int64_t>();
    ev.node_id = j.at("node_id").get<std::string>();
    auto kind = event_kind_from_string(j.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::schema_error, "unknown event kind in log");
    ev.kind = *kind;
    ev.payload = j.at("payload").get<std::map<std::string, std::string>>();
    events.push_back(std::move(ev));
  }
  return events;
}

}  // namespace hawk::engine
