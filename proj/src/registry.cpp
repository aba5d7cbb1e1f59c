#include "hawk/registry.hpp"

#include <algorithm>
#include <atomic>

#include <httplib.h>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::agents {

json AgentSpecification::to_json() const {
  return json{{"name", name},
              {"version", version},
              {"capabilities", capabilities},
              {"input_schema", input_schema},
              {"output_schema", output_schema},
              {"required_resources", required_resources},
              {"config", config}};
}

AgentSpecification AgentSpecification::from_json(const json& doc) {
  AgentSpecification s;
  s.name = doc.at("name").get<std::string>();
  s.version = doc.at("version").get<std::string>();
  for (const auto& c : doc.at("capabilities")) s.capabilities.insert(c.get<std::string>());
  s.input_schema = doc.value("input_schema", std::string{});
  s.output_schema = doc.value("output_schema", std::string{});
  s.required_resources = doc.value("required_resources", std::vector<std::string>{});
  s.config = doc.value("config", json::object());
  return s;
}

std::string to_string(AgentStatus s) {
  switch (s) {
    case AgentStatus::published: return "published";
    case AgentStatus::registered: return "registered";
    case AgentStatus::retired: return "retired";
  }
  return "unknown";
}

std::optional<AgentStatus> agent_status_from_string(const std::string& s) {
  if (s == "published") return AgentStatus::published;
  if (s == "registered") return AgentStatus::registered;
  if (s == "retired") return AgentStatus::retired;
  return std::nullopt;
}

std::string to_string(Health h) {
  switch (h) {
    case Health::unknown: return "unknown";
    case Health::healthy: return "healthy";
    case Health::unhealthy: return "unhealthy";
  }
  return "unknown";
}

std::optional<Health> health_from_string(const std::string& s) {
  if (s == "unknown") return Health::unknown;
  if (s == "healthy") return Health::healthy;
  if (s == "unhealthy") return Health::unhealthy;
  return std::nullopt;
}

json AgentDescriptor::to_json() const {
  return json{{"agent_id", agent_id},
              {"spec", spec.to_json()},
              {"endpoint", endpoint},
              {"status", to_string(status)},
              {"registered_at", registered_at_ms},
              {"health", to_string(health)}};
}

AgentDescriptor AgentDescriptor::from_json(const json& doc) {
  AgentDescriptor d;
  d.agent_id = doc.at("agent_id").get<std::string>();
  d.spec = AgentSpecification::from_json(doc.at("spec"));
  d.endpoint = doc.value("endpoint", std::string{});
  d.status = agent_status_from_string(doc.at("status").get<std::string>())
                 .value_or(AgentStatus::published);
  d.registered_at_ms = doc.value("registered_at", std::int64_t{0});
  d.health = health_from_string(doc.value("health", "unknown")).value_or(Health::unknown);
  return d;
}

int compare_semver(const std::string& a, const std::string& b) {
  auto pa = util::split(a, '.');
  auto pb = util::split(b, '.');
  std::size_t n = std::max(pa.size(), pb.size());
  for (std::size_t i = 0; i < n; ++i) {
    std::string xa = i < pa.size() ? pa[i] : "0";
    std::string xb = i < pb.size() ? pb[i] : "0";
    bool na = !xa.empty() && std::all_of(xa.begin(), xa.end(), ::isdigit);
    bool nb = !xb.empty() && std::all_of(xb.begin(), xb.end(), ::isdigit);
    if (na && nb) {
      long va = std::stol(xa), vb = std::stol(xb);
      if (va != vb) return va < vb ? -1 : 1;
    } else if (xa != xb) {
      return xa < xb ? -1 : 1;
    }
  }
  return 0;
}

// --- registry ----------------------------------------------------------------

std::shared_ptr<const Registry::Snapshot> Registry::snapshot() const {
  std::lock_guard lock(snap_mu_);
  return snapshot_;
}

void Registry::swap_snapshot(Snapshot next) {
  auto ptr = std::make_shared<const Snapshot>(std::move(next));
  {
    std::lock_guard lock(snap_mu_);
    snapshot_ = ptr;
  }
  persist(*ptr);
}

void Registry::persist(const Snapshot& snap) const {
  if (file_path_.empty()) return;
  json arr = json::array();
  for (const auto& d : snap) arr.push_back(d.to_json());
  util::write_file_atomic(file_path_, arr.dump(2));
}

void Registry::attach_file(const std::string& path) {
  std::lock_guard lock(write_mu_);
  file_path_ = path;
  persist(*snapshot());
}

void Registry::load_from_file(const std::string& path) {
  std::lock_guard lock(write_mu_);
  Snapshot snap;
  if (std::filesystem::exists(path)) {
    json arr = json::parse(util::read_file(path));
    for (const auto& jd : arr) snap.push_back(AgentDescriptor::from_json(jd));
  }
  file_path_.clear();  // avoid rewriting during the swap below
  swap_snapshot(std::move(snap));
  file_path_ = path;
}

AgentSpecification Registry::specify(const AgentSpecification& spec) const {
  std::vector<std::string> problems;
  if (spec.name.empty()) problems.push_back("name is empty");
  if (spec.version.empty()) problems.push_back("version is empty");
  if (spec.capabilities.empty()) problems.push_back("capabilities set is empty");

  AgentSpecification canonical = spec;
  canonical.capabilities.clear();
  for (const auto& c : spec.capabilities) {
    auto lowered = util::to_lower(util::trim(c));
    if (lowered.empty())
      problems.push_back("capability tag is blank");
    else
      canonical.capabilities.insert(lowered);
  }

  auto snap = snapshot();
  for (const auto& d : *snap) {
    if (d.spec.name == spec.name && d.spec.version == spec.version) {
      problems.push_back("duplicate (name, version): " + spec.name + "@" + spec.version);
      break;
    }
  }

  if (!problems.empty()) {
    std::string msg;
    for (const auto& p : problems) msg += (msg.empty() ? "" : "; ") + p;
    throw Error(ErrorCode::invalid_spec, msg);
  }
  return canonical;
}

AgentDescriptor Registry::publish(const AgentSpecification& spec) {
  std::lock_guard lock(write_mu_);
  auto snap = *snapshot();
  std::string id = spec.name + "@" + spec.version;
  for (const auto& d : snap)
    if (d.agent_id == id) throw Error(ErrorCode::duplicate_agent, id);

  AgentDescriptor desc;
  desc.agent_id = id;
  desc.spec = spec;
  desc.status = AgentStatus::published;
  desc.health = Health::unknown;
  snap.push_back(desc);
  swap_snapshot(std::move(snap));
  return desc;
}

AgentDescriptor Registry::register_endpoint(const std::string& agent_id,
                                            const std::string& endpoint) {
  std::lock_guard lock(write_mu_);
  auto snap = *snapshot();
  auto it = std::find_if(snap.begin(), snap.end(),
                         [&](const AgentDescriptor& d) { return d.agent_id == agent_id; });
  if (it == snap.end()) throw Error(ErrorCode::unknown_agent, agent_id);
  if (it->status == AgentStatus::retired)
    throw Error(ErrorCode::invalid_spec, agent_id + " is retired; no resurrection");

  if (!endpoint_alive(*this, endpoint))
    throw Error(ErrorCode::endpoint_unreachable, endpoint);

  it->endpoint = endpoint;
  it->status = AgentStatus::registered;
  it->health = Health::healthy;
  it->registered_at_ms = util::now_ms();
  AgentDescriptor out = *it;
  swap_snapshot(std::move(snap));
  return out;
}

void Registry::retire(const std::string& agent_id) {
  std::lock_guard lock(write_mu_);
  auto snap = *snapshot();
  auto it = std::find_if(snap.begin(), snap.end(),
                         [&](const AgentDescriptor& d) { return d.agent_id == agent_id; });
  if (it == snap.end()) throw Error(ErrorCode::unknown_agent, agent_id);
  it->status = AgentStatus::retired;
  swap_snapshot(std::move(snap));
}

std::optional<AgentDescriptor> Registry::find(const std::string& agent_id) const {
  auto snap = snapshot();
  for (const auto& d : *snap)
    if (d.agent_id == agent_id) return d;
  return std::nullopt;
}

std::vector<AgentDescriptor> Registry::all() const { return *snapshot(); }

std::vector<AgentDescriptor> Registry::discover(const DiscoveryQuery& query) const {
  auto health_rank = [](Health h) {
    switch (h) {
      case Health::healthy: return 0;
      case Health::unknown: return 1;
      case Health::unhealthy: return 2;
    }
    return 3;
  };

  auto snap = snapshot();
  std::vector<AgentDescriptor> hits;
  for (const auto& d : *snap) {
    if (d.status != AgentStatus::registered) continue;
    if (query.min_health && health_rank(d.health) > health_rank(*query.min_health)) continue;
    if (!query.name_pattern.empty() && !util::glob_match(query.name_pattern, d.spec.name))
      continue;
    bool covers = std::includes(d.spec.capabilities.begin(), d.spec.capabilities.end(),
                                query.capabilities.begin(), query.capabilities.end());
    if (!covers) continue;
    hits.push_back(d);
  }
  std::sort(hits.begin(), hits.end(),
            [&](const AgentDescriptor& a, const AgentDescriptor& b) {
              int ha = health_rank(a.health), hb = health_rank(b.health);
              if (ha != hb) return ha < hb;
              auto extra_a = a.spec.capabilities.size() - query.capabilities.size();
              auto extra_b = b.spec.capabilities.size() - query.capabilities.size();
              if (extra_a != extra_b) return extra_a < extra_b;
              int vc = compare_semver(a.spec.version, b.spec.version);
              if (vc != 0) return vc > 0;  // newest first
              return a.spec.name < b.spec.name;
            });
  return hits;
}

void Registry::bind_callable(const std::string& callable_name, Callable fn) {
  std::lock_guard lock(callables_mu_);
  callables_[callable_name] = std::move(fn);
}

bool Registry::has_callable(const std::string& callable_name) const {
  std::lock_guard lock(callables_mu_);
  return callables_.count(callable_name) > 0;
}

json Registry::invoke(const std::string& agent_id, const json& args) const {
  auto desc = find(agent_id);
  if (!desc) throw Error(ErrorCode::unknown_agent, agent_id);
  if (desc->status != AgentStatus::registered)
    throw Error(ErrorCode::unknown_agent, agent_id + " is not registered");

  if (desc->endpoint.rfind("callable:", 0) == 0) {
    Callable fn;
    {
      std::lock_guard lock(callables_mu_);
      auto it = callables_.find(desc->endpoint.substr(9));
      if (it == callables_.end())
        throw Error(ErrorCode::endpoint_unreachable, desc->endpoint);
      fn = it->second;
    }
    return fn(args);
  }

  httplib::Client client(desc->endpoint);
  client.set_read_timeout(std::chrono::seconds(30));
  auto resp = client.Post("/invoke", args.dump(), "application/json");
  if (!resp || resp->status != 200)
    throw Error(ErrorCode::endpoint_unreachable, desc->endpoint);
  return json::parse(resp->body);
}

void Registry::probe_health() {
  std::lock_guard lock(write_mu_);
  auto snap = *snapshot();
  bool changed = false;
  for (auto& d : snap) {
    if (d.status != AgentStatus::registered) continue;
    Health next = endpoint_alive(*this, d.endpoint) ? Health::healthy : Health::unhealthy;
    if (next != d.health) {
      d.health = next;
      changed = true;
    }
  }
  if (changed) swap_snapshot(std::move(snap));
}

bool endpoint_alive(const Registry& registry, const std::string& endpoint) {
  if (endpoint.rfind("callable:", 0) == 0)
    return registry.has_callable(endpoint.substr(9));
  if (endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0) {
    httplib::Client client(endpoint);
    client.set_connection_timeout(std::chrono::seconds(2));
    client.set_read_timeout(std::chrono::seconds(2));
    auto resp = client.Get("/health");
    return resp && resp->status >= 200 && resp->status < 300;
  }
  return false;
}

}  // namespace hawk::agents
