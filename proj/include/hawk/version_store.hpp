#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace hawk::op {

// Linear version chain identifier: v0, v1, ... Parent of vN is v(N-1).
struct VersionTag {
  int n = 0;

  std::string str() const { return "v" + std::to_string(n); }
  std::optional<VersionTag> parent() const {
    if (n == 0) return std::nullopt;
    return VersionTag{n - 1};
  }
  static std::optional<VersionTag> parse(const std::string& s);

  auto operator<=>(const VersionTag&) const = default;
};

struct VersionedDocument {
  std::string key;
  VersionTag version;
  std::string body;  // opaque bytes, immutable once committed
  std::int64_t committed_at_ms = 0;
};

struct ChainEntry {
  VersionTag version;
  std::string sha256;
  std::optional<VersionTag> parent;
  std::int64_t ts_ms = 0;
};

// Append-only store of linear version chains with optimistic concurrency:
// a commit names the head it extends and loses with StaleParent otherwise.
// Readers run concurrently; the commit section is serialized per key.
class VersionStore {
 public:
  virtual ~VersionStore() = default;

  virtual VersionTag create(const std::string& key, std::string body) = 0;
  virtual VersionTag commit(const std::string& key, std::string body, VersionTag parent) = 0;
  virtual VersionedDocument get(const std::string& key,
                                std::optional<VersionTag> version) const = 0;
  VersionedDocument get(const std::string& key) const { return get(key, std::nullopt); }
  virtual VersionTag head(const std::string& key) const = 0;
  virtual bool has_key(const std::string& key) const = 0;
  virtual std::vector<std::string> keys() const = 0;
  virtual std::vector<ChainEntry> chain(const std::string& key) const = 0;
};

class InMemoryVersionStore : public VersionStore {
 public:
  using VersionStore::get;

  VersionTag create(const std::string& key, std::string body) override;
  VersionTag commit(const std::string& key, std::string body, VersionTag parent) override;
  VersionedDocument get(const std::string& key,
                        std::optional<VersionTag> version) const override;
  VersionTag head(const std::string& key) const override;
  bool has_key(const std::string& key) const override;
  std::vector<std::string> keys() const override;
  std::vector<ChainEntry> chain(const std::string& key) const override;

 private:
  struct Chain {
    std::vector<VersionedDocument> versions;
    std::vector<ChainEntry> entries;
  };
  mutable std::mutex mu_;
  std::map<std::string, Chain> chains_;
};

// Layout: <root>/<key>/manifest.json plus <root>/<key>/v<N>.bin.
// The manifest is rewritten atomically after each commit.
class FileVersionStore : public VersionStore {
 public:
  explicit FileVersionStore(std::filesystem::path root);

  using VersionStore::get;

  VersionTag create(const std::string& key, std::string body) override;
  VersionTag commit(const std::string& key, std::string body, VersionTag parent) override;
  VersionedDocument get(const std::string& key,
                        std::optional<VersionTag> version) const override;
  VersionTag head(const std::string& key) const override;
  bool has_key(const std::string& key) const override;
  std::vector<std::string> keys() const override;
  std::vector<ChainEntry> chain(const std::string& key) const override;

  const std::filesystem::path& root() const { return root_; }

 private:
  std::filesystem::path key_dir(const std::string& key) const;
  std::vector<ChainEntry> read_manifest(const std::string& key) const;
  void write_manifest(const std::string& key, const std::vector<ChainEntry>& entries) const;

  std::filesystem::path root_;
  mutable std::mutex mu_;
};

}  // namespace hawk::op
