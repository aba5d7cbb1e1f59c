#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

namespace hawk::agents {

using json = nlohmann::json;

struct AgentSpecification {
  std::string name;
  std::string version;  // semver x.y.z
  std::set<std::string> capabilities;  // canonical form: lowercase, non-empty
  std::string input_schema;
  std::string output_schema;
  std::vector<std::string> required_resources;
  json config = json::object();

  json to_json() const;
  static AgentSpecification from_json(const json& doc);
};

enum class AgentStatus { published, registered, retired };
std::string to_string(AgentStatus s);
std::optional<AgentStatus> agent_status_from_string(const std::string& s);

enum class Health { unknown, healthy, unhealthy };
std::string to_string(Health h);
std::optional<Health> health_from_string(const std::string& s);

struct AgentDescriptor {
  std::string agent_id;  // registry-assigned: "<name>@<version>"
  AgentSpecification spec;
  std::string endpoint;  // "callable:<name>" or an http(s) URL; empty until registered
  AgentStatus status = AgentStatus::published;
  std::int64_t registered_at_ms = 0;
  Health health = Health::unknown;

  json to_json() const;
  static AgentDescriptor from_json(const json& doc);
};

struct DiscoveryQuery {
  std::set<std::string> capabilities;
  std::string name_pattern;  // glob; empty matches all
  std::optional<Health> min_health;
};

// Three-digit-group semver ordering; non-numeric fragments compare as text.
int compare_semver(const std::string& a, const std::string& b);

// Shared service for agent lifecycle and discovery. Reads take an immutable
// snapshot; mutations are serialized and swap the snapshot atomically.
class Registry {
 public:
  using Callable = std::function<json(const json&)>;

  // Schema-checks and canonicalizes; rejects duplicates already catalogued.
  AgentSpecification specify(const AgentSpecification& spec) const;

  AgentDescriptor publish(const AgentSpecification& spec);
  AgentDescriptor register_endpoint(const std::string& agent_id, const std::string& endpoint);
  void retire(const std::string& agent_id);

  std::optional<AgentDescriptor> find(const std::string& agent_id) const;
  std::vector<AgentDescriptor> all() const;

  // Registered, non-retired agents whose capabilities cover the query set,
  // in a total deterministic order: health desc, fewest extra capabilities,
  // newest version, name.
  std::vector<AgentDescriptor> discover(const DiscoveryQuery& query) const;

  // In-process endpoints. Binding may be replaced (re-running a workflow
  // re-binds its closures); the descriptor is unaffected.
  void bind_callable(const std::string& callable_name, Callable fn);
  bool has_callable(const std::string& callable_name) const;
  json invoke(const std::string& agent_id, const json& args) const;

  // Re-probe remote endpoints; in-process agents are always healthy.
  void probe_health();

  // Single JSON file, rewritten atomically on every mutation when attached.
  void attach_file(const std::string& path);
  // Replaces the catalogue with the file's contents and attaches the file.
  void load_from_file(const std::string& path);

 private:
  using Snapshot = std::vector<AgentDescriptor>;
  std::shared_ptr<const Snapshot> snapshot() const;
  void swap_snapshot(Snapshot next);
  void persist(const Snapshot& snap) const;

  mutable std::mutex write_mu_;
  mutable std::mutex snap_mu_;
  std::shared_ptr<const Snapshot> snapshot_ = std::make_shared<Snapshot>();
  mutable std::mutex callables_mu_;
  std::map<std::string, Callable> callables_;
  std::string file_path_;
};

// Probes "callable:" against the registry and http(s) endpoints with a
// GET /health ping.
bool endpoint_alive(const Registry& registry, const std::string& endpoint);

}  // namespace hawk::agents
