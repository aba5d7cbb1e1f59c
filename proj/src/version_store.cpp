#include "hawk/version_store.hpp"

#include <algorithm>

#include <json.hpp>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::op {

using json = nlohmann::json;

std::optional<VersionTag> VersionTag::parse(const std::string& s) {
  if (s.size() < 2 || s[0] != 'v') return std::nullopt;
  for (std::size_t i = 1; i < s.size(); ++i)
    if (!std::isdigit(static_cast<unsigned char>(s[i]))) return std::nullopt;
  return VersionTag{std::stoi(s.substr(1))};
}

// --- in-memory ---------------------------------------------------------------

VersionTag InMemoryVersionStore::create(const std::string& key, std::string body) {
  std::lock_guard lock(mu_);
  auto [it, inserted] = chains_.try_emplace(key);
  if (!inserted)
    throw Error(ErrorCode::stale_parent, "key '" + key + "' already exists; commit instead");
  VersionTag tag{0};
  auto now = util::now_ms();
  it->second.entries.push_back({tag, util::sha256_hex(body), std::nullopt, now});
  it->second.versions.push_back({key, tag, std::move(body), now});
  return tag;
}

VersionTag InMemoryVersionStore::commit(const std::string& key, std::string body,
                                        VersionTag parent) {
  std::lock_guard lock(mu_);
  auto it = chains_.find(key);
  if (it == chains_.end()) throw Error(ErrorCode::key_not_found, key);
  VersionTag head = it->second.entries.back().version;
  if (parent != head)
    throw Error(ErrorCode::stale_parent,
                "parent " + parent.str() + " is not head " + head.str() + " of '" + key + "'");
  VersionTag tag{head.n + 1};
  auto now = util::now_ms();
  it->second.entries.push_back({tag, util::sha256_hex(body), parent, now});
  it->second.versions.push_back({key, tag, std::move(body), now});
  return tag;
}

VersionedDocument InMemoryVersionStore::get(const std::string& key,
                                            std::optional<VersionTag> version) const {
  std::lock_guard lock(mu_);
  auto it = chains_.find(key);
  if (it == chains_.end()) throw Error(ErrorCode::key_not_found, key);
  if (!version) return it->second.versions.back();
  if (version->n < 0 || version->n >= static_cast<int>(it->second.versions.size()))
    throw Error(ErrorCode::version_not_found, key + "@" + version->str());
  return it->second.versions[static_cast<std::size_t>(version->n)];
}

VersionTag InMemoryVersionStore::head(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = chains_.find(key);
  if (it == chains_.end()) throw Error(ErrorCode::key_not_found, key);
  return it->second.entries.back().version;
}

bool InMemoryVersionStore::has_key(const std::string& key) const {
  std::lock_guard lock(mu_);
  return chains_.count(key) > 0;
}

std::vector<std::string> InMemoryVersionStore::keys() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [k, _] : chains_) out.push_back(k);
  return out;
}

std::vector<ChainEntry> InMemoryVersionStore::chain(const std::string& key) const {
  std::lock_guard lock(mu_);
  auto it = chains_.find(key);
  if (it == chains_.end()) throw Error(ErrorCode::key_not_found, key);
  return it->second.entries;
}

// --- file-backed --------------------------------------------------------------

FileVersionStore::FileVersionStore(std::filesystem::path root) : root_(std::move(root)) {
  std::filesystem::create_directories(root_);
}

std::filesystem::path FileVersionStore::key_dir(const std::string& key) const {
  // Keys may contain '/', mapping naturally onto subdirectories.
  return root_ / key;
}

std::vector<ChainEntry> FileVersionStore::read_manifest(const std::string& key) const {
  auto path = key_dir(key) / "manifest.json";
  if (!std::filesystem::exists(path)) throw Error(ErrorCode::key_not_found, key);
  json doc = json::parse(util::read_file(path));
  std::vector<ChainEntry> entries;
  for (const auto& je : doc.at("chain")) {
    ChainEntry e;
    auto tag = VersionTag::parse(je.at("version").get<std::string>());
    if (!tag) throw Error(ErrorCode::schema_error, "bad version tag in manifest for " + key);
    e.version = *tag;
    e.sha256 = je.at("sha256").get<std::string>();
    if (!je.at("parent").is_null())
      e.parent = VersionTag::parse(je.at("parent").get<std::string>());
    e.ts_ms = je.at("ts").get<std::int64_t>();
    entries.push_back(e);
  }
  if (entries.empty()) throw Error(ErrorCode::schema_error, "empty manifest for " + key);
  return entries;
}

void FileVersionStore::write_manifest(const std::string& key,
                                      const std::vector<ChainEntry>& entries) const {
  json chain = json::array();
  for (const auto& e : entries) {
    chain.push_back({{"version", e.version.str()},
                     {"file", e.version.str() + ".bin"},
                     {"sha256", e.sha256},
                     {"parent", e.parent ? json(e.parent->str()) : json()},
                     {"ts", e.ts_ms}});
  }
  util::write_file_atomic(key_dir(key) / "manifest.json", json{{"chain", chain}}.dump(2));
}

VersionTag FileVersionStore::create(const std::string& key, std::string body) {
  std::lock_guard lock(mu_);
  auto dir = key_dir(key);
  if (std::filesystem::exists(dir / "manifest.json"))
    throw Error(ErrorCode::stale_parent, "key '" + key + "' already exists; commit instead");
  std::filesystem::create_directories(dir);
  VersionTag tag{0};
  util::write_file(dir / (tag.str() + ".bin"), body);
  write_manifest(key, {{tag, util::sha256_hex(body), std::nullopt, util::now_ms()}});
  return tag;
}

VersionTag FileVersionStore::commit(const std::string& key, std::string body,
                                    VersionTag parent) {
  std::lock_guard lock(mu_);
  auto entries = read_manifest(key);
  VersionTag head = entries.back().version;
  if (parent != head)
    throw Error(ErrorCode::stale_parent,
                "parent " + parent.str() + " is not head " + head.str() + " of '" + key + "'");
  VersionTag tag{head.n + 1};
  util::write_file(key_dir(key) / (tag.str() + ".bin"), body);
  entries.push_back({tag, util::sha256_hex(body), parent, util::now_ms()});
  write_manifest(key, entries);
  return tag;
}

VersionedDocument FileVersionStore::get(const std::string& key,
                                        std::optional<VersionTag> version) const {
  std::lock_guard lock(mu_);
  auto entries = read_manifest(key);
  VersionTag tag = version.value_or(entries.back().version);
  if (tag.n < 0 || tag.n >= static_cast<int>(entries.size()))
    throw Error(ErrorCode::version_not_found, key + "@" + tag.str());
  VersionedDocument doc;
  doc.key = key;
  doc.version = tag;
  doc.body = util::read_file(key_dir(key) / (tag.str() + ".bin"));
  doc.committed_at_ms = entries[static_cast<std::size_t>(tag.n)].ts_ms;
  return doc;
}

VersionTag FileVersionStore::head(const std::string& key) const {
  std::lock_guard lock(mu_);
  return read_manifest(key).back().version;
}

bool FileVersionStore::has_key(const std::string& key) const {
  std::lock_guard lock(mu_);
  return std::filesystem::exists(key_dir(key) / "manifest.json");
}

std::vector<std::string> FileVersionStore::keys() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  if (!std::filesystem::exists(root_)) return out;
  for (const auto& entry : std::filesystem::recursive_directory_iterator(root_)) {
    if (entry.is_regular_file() && entry.path().filename() == "manifest.json")
      out.push_back(std::filesystem::relative(entry.path().parent_path(), root_).generic_string());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<ChainEntry> FileVersionStore::chain(const std::string& key) const {
  std::lock_guard lock(mu_);
  return read_manifest(key);
}

}  // namespace hawk::op
