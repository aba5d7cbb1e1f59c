#include "hawk/dispatch.hpp"

#include <map>

#include "hawk/errors.hpp"
#include "hawk/reasoning.hpp"
#include "hawk/util.hpp"

namespace hawk::op {

TaskPolicy tune(const std::vector<TaskOutcome>& history, const TaskPolicy& current) {
  if (history.empty()) return current;
  TaskPolicy next = current;

  int timeouts = 0;
  for (const auto& h : history) timeouts += h.timed_out ? 1 : 0;
  if (static_cast<double>(timeouts) / history.size() > 0.25)
    next.timeout_ms = std::min(current.timeout_ms * 2, current.base_timeout_ms * 10);

  struct Tally {
    int total = 0;
    int failed = 0;
  };
  std::map<std::string, Tally> by_backend;
  for (const auto& h : history) {
    auto& t = by_backend[h.backend];
    t.total += 1;
    t.failed += h.ok ? 0 : 1;
  }

  auto rate = [&](const std::string& b) -> double {
    auto it = by_backend.find(b);
    if (it == by_backend.end() || it->second.total == 0) return 1.0;
    return static_cast<double>(it->second.failed) / it->second.total;
  };

  double preferred_rate = rate(current.preferred_backend);
  std::string best = current.preferred_backend;
  double best_rate = preferred_rate;
  for (const auto& [backend, tally] : by_backend) {
    if (backend == current.preferred_backend || tally.total < 5) continue;
    double r = static_cast<double>(tally.failed) / tally.total;
    if (r < best_rate) {
      best = backend;
      best_rate = r;
    }
  }
  next.preferred_backend = best;
  return next;
}

void require_capability(const ExecutionContext& ctx, const std::string& resource_id,
                        Action action) {
  auto decision = authorize(ctx.capabilities, ctx.principal, resource_id, action,
                            util::now_ms());
  if (decision.allowed) return;
  if (ctx.sink)
    ctx.sink->emit(ctx.node_id, engine::EventKind::violation,
                   {{"error_class", "capability_denied"},
                    {"resource", resource_id},
                    {"action", to_string(action)},
                    {"denied_by", decision.denied_by}});
  throw Error(ErrorCode::capability_denied,
              ctx.principal + " -> " + resource_id + " (" + to_string(action) +
                  "): " + decision.denied_by);
}

namespace {

using engine::TaskResult;

TaskResult ok_result(json output) {
  TaskResult r;
  r.ok = true;
  r.output = std::move(output);
  return r;
}

std::string param_str(const model::TaskNode& node, const std::string& key,
                      const std::string& fallback = {}) {
  if (!node.params.contains(key)) return fallback;
  const auto& v = node.params.at(key);
  return v.is_string() ? v.get<std::string>() : v.dump();
}

TaskResult run_environment(const model::TaskNode& node, ExecutionContext& ctx) {
  if (!ctx.version_store)
    throw Error(ErrorCode::dispatch_unresolvable, "no version store in context");
  std::string action = param_str(node, "action", "get");
  std::string key = param_str(node, "key");

  if (action == "get") {
    require_capability(ctx, "store/" + key, Action::read);
    std::optional<VersionTag> version;
    if (node.params.contains("version")) {
      version = VersionTag::parse(param_str(node, "version"));
      if (!version) throw Error(ErrorCode::version_not_found, param_str(node, "version"));
    }
    auto doc = ctx.version_store->get(key, version);
    return ok_result(json{{"key", doc.key}, {"version", doc.version.str()}, {"body", doc.body}});
  }
  if (action == "create") {
    require_capability(ctx, "store/" + key, Action::write);
    auto tag = ctx.version_store->create(key, param_str(node, "body"));
    return ok_result(json{{"key", key}, {"version", tag.str()}});
  }
  if (action == "commit") {
    require_capability(ctx, "store/" + key, Action::write);
    auto parent = VersionTag::parse(param_str(node, "parent"));
    if (!parent) throw Error(ErrorCode::version_not_found, param_str(node, "parent"));
    auto tag = ctx.version_store->commit(key, param_str(node, "body"), *parent);
    return ok_result(json{{"key", key}, {"version", tag.str()}});
  }
  throw Error(ErrorCode::dispatch_unresolvable, "environment action '" + action + "'");
}

TaskResult run_memory(const model::TaskNode& node, ExecutionContext& ctx) {
  if (!ctx.memory_store)
    throw Error(ErrorCode::dispatch_unresolvable, "no memory store in context");
  std::string action = param_str(node, "action", "query");
  std::string agent_id = param_str(node, "agent_id");

  if (action == "append") {
    require_capability(ctx, "memory/" + agent_id, Action::write);
    MemoryRecord record;
    record.kind = memory_kind_from_string(param_str(node, "kind", "observation"))
                      .value_or(MemoryKind::observation);
    record.body = param_str(node, "body");
    if (auto tag = VersionTag::parse(param_str(node, "chapter_version", "v0")))
      record.chapter_version = *tag;
    auto seq = ctx.memory_store->append(agent_id, std::move(record));
    return ok_result(json{{"agent_id", agent_id}, {"seq", seq}});
  }
  if (action == "query") {
    require_capability(ctx, "memory/" + agent_id, Action::read);
    MemoryFilter filter;
    if (node.params.contains("kind"))
      filter.kind = memory_kind_from_string(param_str(node, "kind"));
    if (node.params.contains("since_seq"))
      filter.since_seq = node.params.at("since_seq").get<std::int64_t>();
    if (node.params.contains("chapter_version"))
      filter.chapter_version = VersionTag::parse(param_str(node, "chapter_version"));
    json records = json::array();
    for (const auto& r : ctx.memory_store->query(agent_id, filter)) {
      records.push_back({{"seq", r.seq},
                         {"kind", to_string(r.kind)},
                         {"body", r.body},
                         {"chapter_version", r.chapter_version.str()}});
    }
    return ok_result(json{{"agent_id", agent_id}, {"records", records}});
  }
  throw Error(ErrorCode::dispatch_unresolvable, "memory action '" + action + "'");
}

TaskResult run_task_management(const model::TaskNode& node, ExecutionContext& ctx) {
  if (!ctx.registry)
    throw Error(ErrorCode::dispatch_unresolvable, "no registry in context");

  agents::DiscoveryQuery query;
  if (node.params.contains("capability"))
    query.capabilities.insert(param_str(node, "capability"));
  if (node.params.contains("capabilities"))
    for (const auto& c : node.params.at("capabilities"))
      query.capabilities.insert(c.get<std::string>());
  if (node.params.contains("name_pattern"))
    query.name_pattern = param_str(node, "name_pattern");

  auto hits = ctx.registry->discover(query);
  if (hits.empty())
    throw Error(ErrorCode::no_agent_found, "no registered agent covers the query");
  const auto& agent = hits.front();  // documented ranking picks the winner

  require_capability(ctx, "agent/" + agent.agent_id, Action::invoke);
  json payload = node.params.value("payload", json::object());
  json output = ctx.registry->invoke(agent.agent_id, payload);
  TaskResult result = ok_result(std::move(output));
  result.metrics["agent_id"] = agent.agent_id;
  return result;
}

TaskResult run_reasoning(const model::TaskNode& node, ExecutionContext& ctx) {
  if (!ctx.resources)
    throw Error(ErrorCode::dispatch_unresolvable, "no resource manager in context");
  std::string backend = param_str(node, "backend", "mock");
  require_capability(ctx, "model/" + backend, Action::invoke);
  auto handle = ctx.resources->resolve(backend);

  ReasoningInput input;
  input.question = param_str(node, "question");
  if (node.params.contains("evidence"))
    for (const auto& e : node.params.at("evidence"))
      input.evidence.push_back(e.get<std::string>());
  res::GenerationParams params;
  if (node.params.contains("seed"))
    params.seed = node.params.at("seed").get<std::uint64_t>();

  auto trace = reason(input, *handle, params, ctx.sink, ctx.node_id);
  return ok_result(json{{"steps", trace.steps}, {"answer", trace.answer}});
}

TaskResult run_task_optimizer(const model::TaskNode& node, ExecutionContext&) {
  TaskPolicy current;
  if (node.params.contains("policy")) {
    const auto& jp = node.params.at("policy");
    current.preferred_backend = jp.value("preferred_backend", std::string{});
    current.max_attempts = jp.value("max_attempts", 1);
    current.timeout_ms = jp.value("timeout_ms", std::int64_t{30000});
    current.base_timeout_ms = jp.value("base_timeout_ms", current.timeout_ms);
  }
  std::vector<TaskOutcome> history;
  if (node.params.contains("history"))
    for (const auto& jh : node.params.at("history"))
      history.push_back({jh.value("backend", std::string{}), jh.value("ok", false),
                         jh.value("timed_out", false)});
  TaskPolicy next = tune(history, current);
  return ok_result(json{{"preferred_backend", next.preferred_backend},
                        {"max_attempts", next.max_attempts},
                        {"timeout_ms", next.timeout_ms}});
}

TaskResult run_security(const model::TaskNode& node, ExecutionContext& ctx) {
  std::string action = param_str(node, "action", "authorize");
  if (action == "authorize") {
    auto act = action_from_string(param_str(node, "check_action", "read"));
    if (!act) throw Error(ErrorCode::schema_error, "unknown action in security node");
    auto decision = authorize(ctx.capabilities, param_str(node, "principal", ctx.principal),
                              param_str(node, "resource"), *act, util::now_ms());
    return ok_result(json{{"allowed", decision.allowed}, {"denied_by", decision.denied_by}});
  }
  throw Error(ErrorCode::dispatch_unresolvable, "security action '" + action + "'");
}

}  // namespace

engine::TaskResult dispatch(const model::TaskNode& node, ExecutionContext& ctx) {
  switch (node.operator_kind) {
    case model::OperatorKind::environment: return run_environment(node, ctx);
    case model::OperatorKind::memory: return run_memory(node, ctx);
    case model::OperatorKind::task_management: return run_task_management(node, ctx);
    case model::OperatorKind::task_optimizer: return run_task_optimizer(node, ctx);
    case model::OperatorKind::reasoning: return run_reasoning(node, ctx);
    case model::OperatorKind::security: return run_security(node, ctx);
  }
  throw Error(ErrorCode::dispatch_unresolvable, "unhandled operator kind");
}

std::vector<Capability> open_capabilities() {
  return {{"*", "*", {Action::read, Action::write, Action::invoke}, std::nullopt}};
}

}  // namespace hawk::op
