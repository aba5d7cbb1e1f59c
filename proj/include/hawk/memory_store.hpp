#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hawk/version_store.hpp"

namespace hawk::op {

enum class MemoryKind { observation, goal, plan, outcome };
std::string to_string(MemoryKind kind);
std::optional<MemoryKind> memory_kind_from_string(const std::string& s);

struct MemoryRecord {
  std::string agent_id;
  std::int64_t seq = 0;  // assigned by the store, strictly increasing per agent
  MemoryKind kind = MemoryKind::observation;
  std::string body;
  VersionTag chapter_version;
};

struct MemoryFilter {
  std::optional<MemoryKind> kind;
  std::optional<std::int64_t> since_seq;  // exclusive: returns seq > since_seq
  std::optional<VersionTag> chapter_version;
};

// Append-only per-agent history. Queries on a never-seen agent return an
// empty list so first-chapter bootstrapping needs no special casing.
class MemoryStore {
 public:
  MemoryStore() = default;
  MemoryStore(const MemoryStore& other);
  MemoryStore& operator=(const MemoryStore&) = delete;

  std::int64_t append(const std::string& agent_id, MemoryRecord record);
  std::vector<MemoryRecord> query(const std::string& agent_id,
                                  const MemoryFilter& filter = {}) const;
  std::vector<MemoryRecord> last(const std::string& agent_id, std::size_t count) const;
  std::int64_t tail_seq(const std::string& agent_id) const;  // 0 when empty
  std::vector<std::string> agents() const;

 private:
  mutable std::mutex mu_;
  std::map<std::string, std::vector<MemoryRecord>> records_;
};

}  // namespace hawk::op
