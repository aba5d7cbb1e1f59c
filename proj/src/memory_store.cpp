#include "hawk/memory_store.hpp"

namespace hawk::op {

std::string to_string(MemoryKind kind) {
  switch (kind) {
    case MemoryKind::observation: return "observation";
    case MemoryKind::goal: return "goal";
    case MemoryKind::plan: return "plan";
    case MemoryKind::outcome: return "outcome";
  }
  return "unknown";
}

std::optional<MemoryKind> memory_kind_from_string(const std::string& s) {
  if (s == "observation") return MemoryKind::observation;
  if (s == "goal") return MemoryKind::goal;
  if (s == "plan") return MemoryKind::plan;
  if (s == "outcome") return MemoryKind::outcome;
  return std::nullopt;
}

MemoryStore::MemoryStore(const MemoryStore& other) {
  std::lock_guard lock(other.mu_);
  records_ = other.records_;
}

std::int64_t MemoryStore::append(const std::string& agent_id, MemoryRecord record) {
  std::lock_guard lock(mu_);
  auto& list = records_[agent_id];
  record.agent_id = agent_id;
  record.seq = list.empty() ? 1 : list.back().seq + 1;
  list.push_back(std::move(record));
  return list.back().seq;
}

std::vector<MemoryRecord> MemoryStore::query(const std::string& agent_id,
                                             const MemoryFilter& filter) const {
  std::lock_guard lock(mu_);
  std::vector<MemoryRecord> out;
  auto it = records_.find(agent_id);
  if (it == records_.end()) return out;
  for (const auto& r : it->second) {
    if (filter.kind && r.kind != *filter.kind) continue;
    if (filter.since_seq && r.seq <= *filter.since_seq) continue;
    if (filter.chapter_version && r.chapter_version != *filter.chapter_version) continue;
    out.push_back(r);
  }
  return out;
}

std::vector<MemoryRecord> MemoryStore::last(const std::string& agent_id,
                                            std::size_t count) const {
  std::lock_guard lock(mu_);
  std::vector<MemoryRecord> out;
  auto it = records_.find(agent_id);
  if (it == records_.end()) return out;
  const auto& list = it->second;
  std::size_t start = list.size() > count ? list.size() - count : 0;
  out.assign(list.begin() + static_cast<std::ptrdiff_t>(start), list.end());
  return out;
}

std::int64_t MemoryStore::tail_seq(const std::string& agent_id) const {
  std::lock_guard lock(mu_);
  auto it = records_.find(agent_id);
  if (it == records_.end() || it->second.empty()) return 0;
  return it->second.back().seq;
}

std::vector<std::string> MemoryStore::agents() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : records_) out.push_back(id);
  return out;
}

}  // namespace hawk::op
