#include <doctest.h>

#include <atomic>
#include <chrono>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include "hawk/engine.hpp"
#include "hawk/errors.hpp"
#include "hawk/model.hpp"

using namespace hawk;
using engine::EventKind;
using engine::NodeStatus;
using engine::WorkflowInstance;
using json = nlohmann::json;

namespace {

model::WorkflowSpec make_spec(
    const std::vector<std::pair<std::string, std::vector<std::string>>>& nodes, int cap = 8) {
  model::WorkflowSpec spec;
  spec.spec_id = "t";
  spec.concurrency_cap = cap;
  for (const auto& [id, deps] : nodes) {
    model::TaskNode n;
    n.node_id = id;
    n.operator_kind = model::OperatorKind::memory;
    n.depends_on = deps;
    n.params = json::object();
    spec.nodes.push_back(n);
  }
  return spec;
}

struct NodeScript {
  int fail_times = 0;   // first N attempts fail
  bool fail_always = false;
  int delay_ms = 0;
};

// Scripted dispatcher: per-node failure counts and delays, thread-safe.
class ScriptedDispatcher : public engine::OperatorDispatcher {
 public:
  explicit ScriptedDispatcher(std::map<std::string, NodeScript> scripts = {})
      : scripts_(std::move(scripts)) {}

  bool resolves(model::OperatorKind) const override { return true; }

  engine::TaskResult run(const model::TaskNode& node, engine::EventSink&) override {
    NodeScript script;
    {
      std::lock_guard lock(mu_);
      if (auto it = scripts_.find(node.node_id); it != scripts_.end()) script = it->second;
      attempts_[node.node_id] += 1;
    }
    if (script.delay_ms > 0)
      std::this_thread::sleep_for(std::chrono::milliseconds(script.delay_ms));
    int attempt;
    {
      std::lock_guard lock(mu_);
      attempt = attempts_[node.node_id];
    }
    engine::TaskResult result;
    if (script.fail_always || attempt <= script.fail_times) {
      result.ok = false;
      result.error = "scripted failure";
      result.error_class = "scripted";
    } else {
      result.ok = true;
      result.output = {{"node", node.node_id}};
    }
    return result;
  }

 private:
  std::mutex mu_;
  std::map<std::string, NodeScript> scripts_;
  std::map<std::string, int> attempts_;
};

int count_events(const WorkflowInstance& instance, const std::string& node, EventKind kind) {
  int n = 0;
  for (const auto& ev : instance.event_log)
    if (ev.node_id == node && ev.kind == kind) ++n;
  return n;
}

// Brute-force longest-path-from-roots oracle via memoized DFS.
std::map<std::string, int> longest_path_oracle(const model::WorkflowSpec& spec) {
  std::map<std::string, std::vector<std::string>> deps;
  for (const auto& n : spec.nodes) deps[n.node_id] = n.depends_on;
  std::map<std::string, int> depth;
  std::function<int(const std::string&)> dfs = [&](const std::string& u) -> int {
    if (auto it = depth.find(u); it != depth.end()) return it->second;
    int best = 0;
    for (const auto& d : deps[u]) best = std::max(best, dfs(d) + 1);
    depth[u] = best;
    return best;
  };
  for (const auto& n : spec.nodes) dfs(n.node_id);
  return depth;
}

model::WorkflowSpec random_dag(std::mt19937_64& rng, int max_nodes = 12) {
  std::uniform_int_distribution<int> node_count(1, max_nodes);
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  int n = node_count(rng);
  std::vector<std::pair<std::string, std::vector<std::string>>> nodes;
  for (int i = 0; i < n; ++i) {
    char id[8];
    std::snprintf(id, sizeof(id), "n%02d", i);
    std::vector<std::string> deps;
    for (int j = 0; j < i; ++j)
      if (coin(rng) < 0.35) {
        char dep[8];
        std::snprintf(dep, sizeof(dep), "n%02d", j);
        deps.push_back(dep);
      }
    nodes.push_back({id, deps});
  }
  return make_spec(nodes);
}

// Replays the log and returns the maximum simultaneous running count.
int max_in_flight(const WorkflowInstance& instance) {
  int running = 0, peak = 0;
  for (const auto& ev : instance.event_log) {
    switch (ev.kind) {
      case EventKind::started:
        peak = std::max(peak, ++running);
        break;
      case EventKind::succeeded:
      case EventKind::failed:
      case EventKind::retried:
        if (ev.payload.count("scope")) break;  // op-level retry, not a node exit
        --running;
        break;
      default:
        break;
    }
  }
  return peak;
}

}  // namespace

TEST_CASE("plan: chain and diamond decompositions") {
  auto chain = engine::plan(make_spec({{"A", {}}, {"B", {"A"}}, {"C", {"B"}}}));
  CHECK(chain.stages == std::vector<std::vector<std::string>>{{"A"}, {"B"}, {"C"}});

  auto diamond =
      engine::plan(make_spec({{"A", {}}, {"B", {"A"}}, {"C", {"A"}}, {"D", {"B", "C"}}}));
  CHECK(diamond.stages == std::vector<std::vector<std::string>>{{"A"}, {"B", "C"}, {"D"}});
  CHECK(diamond.order_index.at("D") == 2);
}

TEST_CASE("plan matches the longest-path oracle on 100 random DAGs") {
  std::mt19937_64 rng(777);
  for (int trial = 0; trial < 100; ++trial) {
    auto spec = random_dag(rng);
    auto planned = engine::plan(spec);
    auto oracle = longest_path_oracle(spec);
    for (const auto& [id, depth] : oracle) CHECK(planned.order_index.at(id) == depth);

    // stages partition the node set
    std::size_t total = 0;
    for (const auto& stage : planned.stages) total += stage.size();
    CHECK(total == spec.nodes.size());
    // every edge goes strictly forward
    for (const auto& n : spec.nodes)
      for (const auto& d : n.depends_on)
        CHECK(planned.order_index.at(d) < planned.order_index.at(n.node_id));
  }
}

TEST_CASE("plan rejects cyclic specs") {
  auto cyclic = make_spec({{"A", {"B"}}, {"B", {"A"}}});
  CHECK_THROWS_AS(engine::plan(cyclic), Error);
}

TEST_CASE("execute: a chain of always-succeed mocks") {
  auto spec = make_spec({{"A", {}}, {"B", {"A"}}, {"C", {"B"}}});
  auto instance = engine::make_instance(spec, {2, 0, 1.0, 8});
  ScriptedDispatcher dispatcher;
  engine::SystemClock clock;
  auto result = engine::execute(instance, dispatcher, clock, 1);

  CHECK(result.all_succeeded);
  for (const auto& [id, st] : instance.node_states) CHECK(st.status == NodeStatus::succeeded);
  int started = 0;
  std::int64_t prev_seq = 0;
  for (const auto& ev : instance.event_log) {
    CHECK(ev.seq > prev_seq);  // strictly increasing
    prev_seq = ev.seq;
    if (ev.kind == EventKind::started) ++started;
  }
  CHECK(started == 3);
  CHECK(instance.terminal());
}

TEST_CASE("execute: retry twice then succeed under max_attempts=3") {
  auto spec = make_spec({{"A", {}}});
  spec.nodes[0].retry_policy = {3, 1, 2.0};
  auto instance = engine::make_instance(spec, {1, 0, 1.0, 8});
  ScriptedDispatcher dispatcher({{"A", {.fail_times = 2}}});
  engine::SystemClock clock;
  auto result = engine::execute(instance, dispatcher, clock, 7);

  CHECK(result.all_succeeded);
  CHECK(instance.node_states.at("A").status == NodeStatus::succeeded);
  CHECK(instance.node_states.at("A").attempts == 3);
  CHECK(count_events(instance, "A", EventKind::retried) == 2);
  CHECK(count_events(instance, "A", EventKind::started) == 3);
  CHECK(count_events(instance, "A", EventKind::succeeded) == 1);
}

TEST_CASE("execute: failure cancels strict descendants, independents continue") {
  auto spec = make_spec({{"A", {}}, {"B", {"A"}}, {"C", {"A"}}, {"D", {"B", "C"}}});
  spec.nodes[1].retry_policy = {2, 1, 2.0};
  auto instance = engine::make_instance(spec, {4, 0, 1.0, 8});
  ScriptedDispatcher dispatcher({{"B", {.fail_always = true}}});
  engine::SystemClock clock;
  auto result = engine::execute(instance, dispatcher, clock, 3);

  CHECK(!result.all_succeeded);
  CHECK(instance.node_states.at("A").status == NodeStatus::succeeded);
  CHECK(instance.node_states.at("C").status == NodeStatus::succeeded);
  CHECK(instance.node_states.at("B").status == NodeStatus::failed);
  CHECK(instance.node_states.at("D").status == NodeStatus::cancelled);
  CHECK(result.node_failures.count("B") == 1);
  CHECK(count_events(instance, "B", EventKind::retried) == 1);  // attempt 2 of 2
  CHECK(count_events(instance, "D", EventKind::cancelled) == 1);
}

TEST_CASE("execute: in-flight bound and edge ordering hold on random DAGs") {
  std::mt19937_64 rng(991);
  for (int trial = 0; trial < 8; ++trial) {
    auto spec = random_dag(rng, 10);
    std::map<std::string, NodeScript> scripts;
    for (const auto& n : spec.nodes) scripts[n.node_id] = {.delay_ms = 3};
    auto instance = engine::make_instance(spec, {2, 0, 1.0, 8});
    ScriptedDispatcher dispatcher(scripts);
    engine::SystemClock clock;
    auto result = engine::execute(instance, dispatcher, clock, trial);

    CHECK(result.all_succeeded);  // liveness at desk scale
    CHECK(max_in_flight(instance) <= 2);

    std::map<std::string, std::int64_t> succeeded_seq, started_seq;
    for (const auto& ev : instance.event_log) {
      if (ev.kind == EventKind::succeeded) succeeded_seq[ev.node_id] = ev.seq;
      if (ev.kind == EventKind::started && !started_seq.count(ev.node_id))
        started_seq[ev.node_id] = ev.seq;
    }
    for (const auto& n : spec.nodes)
      for (const auto& dep : n.depends_on)
        CHECK(succeeded_seq.at(dep) < started_seq.at(n.node_id));
  }
}

TEST_CASE("execute: per-node transition sequences are reproducible under a fixed seed") {
  auto spec = make_spec({{"A", {}}, {"B", {"A"}}, {"C", {"A"}}});
  spec.nodes[1].retry_policy = {3, 2, 2.0};

  auto transitions = [&](std::uint64_t seed) {
    auto instance = engine::make_instance(spec, {2, 0, 1.0, 8});
    ScriptedDispatcher dispatcher({{"B", {.fail_times = 2}}});
    engine::SystemClock clock;
    engine::execute(instance, dispatcher, clock, seed);
    std::map<std::string, std::vector<std::string>> by_node;
    for (const auto& ev : instance.event_log)
      by_node[ev.node_id].push_back(engine::to_string(ev.kind));
    return by_node;
  };

  CHECK(transitions(42) == transitions(42));
}

TEST_CASE("execute preconditions: fresh instance, resolvable kinds") {
  auto spec = make_spec({{"A", {}}});
  auto instance = engine::make_instance(spec, {1, 0, 1.0, 8});
  instance.node_states["A"].status = NodeStatus::succeeded;
  ScriptedDispatcher dispatcher;
  engine::SystemClock clock;
  CHECK_THROWS_AS(engine::execute(instance, dispatcher, clock, 0), Error);

  class NoMemory : public ScriptedDispatcher {
   public:
    bool resolves(model::OperatorKind kind) const override {
      return kind != model::OperatorKind::memory;
    }
  };
  auto fresh = engine::make_instance(spec, {1, 0, 1.0, 8});
  NoMemory narrow;
  try {
    engine::execute(fresh, narrow, clock, 0);
    CHECK(false);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::dispatch_unresolvable);
  }
}

TEST_CASE("monitor: fresh instance is all pending with zero failure rate") {
  auto instance = engine::make_instance(make_spec({{"A", {}}, {"B", {"A"}}}), {1, 0, 1.0, 8});
  auto metrics = engine::monitor_snapshot(instance);
  CHECK(metrics.failure_rate == 0.0);
  CHECK(metrics.status_counts.at("pending") == 2);
  CHECK(!metrics.p50_latency_ms.has_value());
}

TEST_CASE("monitor: counts, failure rate, nearest-rank percentiles") {
  WorkflowInstance instance;
  std::int64_t seq = 1;
  // 10 terminal nodes, one failed; latencies 1..100 spread over synthetic nodes
  for (int i = 0; i < 10; ++i) {
    std::string id = "n" + std::to_string(i);
    instance.spec.nodes.push_back({id, model::OperatorKind::memory, json::object(), {}, {}});
    instance.node_states[id] = {};
    instance.event_log.push_back({seq++, seq, id, EventKind::started, {}});
    auto kind = i == 9 ? EventKind::failed : EventKind::succeeded;
    instance.event_log.push_back(
        {seq++, seq, id, kind, {{"latency_ms", std::to_string(i + 1)}}});
  }
  auto metrics = engine::monitor_snapshot(instance);
  CHECK(metrics.failure_rate == doctest::Approx(0.1));
  CHECK(metrics.completions == 10);

  WorkflowInstance wide;
  seq = 1;
  for (int i = 1; i <= 100; ++i) {
    std::string id = "m" + std::to_string(i);
    wide.spec.nodes.push_back({id, model::OperatorKind::memory, json::object(), {}, {}});
    wide.node_states[id] = {};
    wide.event_log.push_back({seq++, seq, id, EventKind::started, {}});
    wide.event_log.push_back(
        {seq++, seq, id, EventKind::succeeded, {{"latency_ms", std::to_string(i)}}});
  }
  auto percentiles = engine::monitor_snapshot(wide);
  CHECK(*percentiles.p50_latency_ms == 50);  // nearest-rank
  CHECK(*percentiles.p95_latency_ms == 95);
}

TEST_CASE("optimize: the three rule bands") {
  engine::MetricsSummary calm;
  calm.trailing_failure_rate = 0.0;
  engine::StrategyParams current{3, 0, 1.0, 5};
  auto grown = engine::optimize(calm, current);
  CHECK(grown.parallelism == 4);
  CHECK(grown.backoff_scale == 1.0);

  engine::MetricsSummary stormy;
  stormy.trailing_failure_rate = 0.5;
  engine::StrategyParams wide{4, 0, 1.0, 5};
  auto shrunk = engine::optimize(stormy, wide);
  CHECK(shrunk.parallelism == 2);
  CHECK(shrunk.backoff_scale == 2.0);

  engine::MetricsSummary middling;
  middling.trailing_failure_rate = 0.1;
  auto same = engine::optimize(middling, current);
  CHECK(same.parallelism == current.parallelism);
  CHECK(same.backoff_scale == current.backoff_scale);
}

TEST_CASE("optimize stays within bounds when applied repeatedly") {
  std::mt19937_64 rng(55);
  std::uniform_real_distribution<double> rate(0.0, 1.0);
  engine::StrategyParams params{3, 0, 1.0, 5};
  for (int i = 0; i < 200; ++i) {
    engine::MetricsSummary m;
    m.trailing_failure_rate = rate(rng);
    params = engine::optimize(m, params);
    CHECK(params.parallelism >= 1);
    CHECK(params.parallelism <= params.concurrency_cap);
    CHECK(params.backoff_scale > 0.0);
    CHECK(params.backoff_scale <= 8.0);
  }
}

TEST_CASE("event log ndjson round-trips with exactly the five fields") {
  auto spec = make_spec({{"A", {}}, {"B", {"A"}}});
  auto instance = engine::make_instance(spec, {1, 0, 1.0, 8});
  ScriptedDispatcher dispatcher;
  engine::SystemClock clock;
  engine::execute(instance, dispatcher, clock, 0);

  auto text = engine::to_ndjson(instance.event_log);
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    auto doc = json::parse(line);
    CHECK(doc.size() == 5);
    CHECK(doc.contains("seq"));
    CHECK(doc.contains("ts"));
    CHECK(doc.contains("node_id"));
    CHECK(doc.contains("kind"));
    CHECK(doc.contains("payload"));
  }
  auto back = engine::events_from_ndjson(text);
  REQUIRE(back.size() == instance.event_log.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].seq == instance.event_log[i].seq);
    CHECK(back[i].node_id == instance.event_log[i].node_id);
    CHECK(back[i].kind == instance.event_log[i].kind);
  }
}

TEST_CASE("make_instance clamps strategy to the concurrency cap") {
  auto spec = make_spec({{"A", {}}}, 3);
  auto instance = engine::make_instance(spec, {9, 0, 1.0, 99});
  CHECK(instance.strategy.parallelism == 3);
  CHECK(instance.strategy.concurrency_cap == 3);
}
