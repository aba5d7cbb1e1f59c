#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "hawk/output_validation.hpp"

namespace hawk::res {

using json = nlohmann::json;

enum class ResourceKind { data, model, device, tool };
std::string to_string(ResourceKind kind);
std::optional<ResourceKind> resource_kind_from_string(const std::string& s);

struct ResourceLimits {
  int max_concurrent = 4;          // >= 1
  std::int64_t timeout_ms = 30000;
  int max_retries = 0;
};

struct ResourceDescriptor {
  std::string resource_id;
  ResourceKind kind = ResourceKind::model;
  std::string uri;
  std::string auth_env;  // env var holding the bearer secret; empty = no auth
  ResourceLimits limits;
  bool supports_logprobs = false;  // open-logit capability, declared not probed
  std::string model;               // model name for chat-completion backends

  json to_json() const;
  static ResourceDescriptor from_json(const json& doc);
};

enum class FinishReason { stop, length, error };

struct TokenAlternative {
  std::string token;
  double logit = 0.0;
};

struct TokenLogits {
  std::string token;
  std::vector<TokenAlternative> alternatives;
};

struct Usage {
  int prompt_tokens = 0;
  int completion_tokens = 0;
};

struct Completion {
  std::string text;
  FinishReason finish_reason = FinishReason::stop;
  std::vector<TokenLogits> token_logits;  // only for open-logit backends
  Usage usage;
};

struct SampleSet {
  std::vector<std::string> texts;
  Usage usage;
};

using GenerateResult = std::variant<Completion, SampleSet>;

struct GenerationParams {
  double temperature = 0.0;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed;
  int n_samples = 1;  // > 1 drives the sampled truth-estimation path
};

struct LogitEvidence {
  double v_yes = 0.0;
  double v_no = 0.0;
};

struct SampleEvidence {
  int m_yes = 0;
  int m_no = 0;
  int unparseable = 0;
};

using YesNoEvidence = std::variant<LogitEvidence, SampleEvidence>;

class ModelProvider {
 public:
  virtual ~ModelProvider() = default;
  virtual Completion complete(const std::string& prompt, const GenerationParams& params) = 0;
};

struct ToolDefinition {
  std::string name;
  op::OutputSchema input_schema;
  std::function<json(const json&)> fn;
};

// Parses a trimmed reply as yes/no; punctuation after the word is ignored.
std::optional<bool> parse_yes_no(const std::string& text);

// Enforces the descriptor's limits around every call: a concurrency gate,
// the timeout (provider-level), and retry of retriable backend errors with
// seeded jittered backoff.
class ResourceHandle {
 public:
  ResourceHandle(ResourceDescriptor desc, std::shared_ptr<ModelProvider> model,
                 std::shared_ptr<ToolDefinition> tool);

  const ResourceDescriptor& descriptor() const { return desc_; }
  ResourceKind kind() const { return desc_.kind; }

  // Model resources. n_samples > 1 returns the SampleSet variant.
  GenerateResult generate(const std::string& prompt, const GenerationParams& params);

  // Yes/no evidence matching the backend's declared capability: open-logit
  // reads the first answer token's alternatives, closed-logit counts over
  // params.n_samples constrained completions.
  YesNoEvidence ask_yes_no(const std::string& question, const GenerationParams& params);

  // Tool resources.
  json invoke_tool(const json& args);

  // Instrumentation for limit tests.
  int max_in_flight_seen() const;

 private:
  Completion complete_with_retries(const std::string& prompt, const GenerationParams& params);

  ResourceDescriptor desc_;
  std::shared_ptr<ModelProvider> model_;
  std::shared_ptr<ToolDefinition> tool_;

  class GateGuard;
  mutable std::mutex gate_mu_;
  std::condition_variable gate_cv_;
  int in_flight_ = 0;
  int max_in_flight_ = 0;
};

// Deterministic scripted backend. The fixture maps a prompt tag (the first
// line of the prompt) to one of:
//   {"text": "..."}                      — fixed completion
//   {"samples": ["...", ...]}           — sample picked by seed index
//   {"logits": {"yes": v, "no": v}}     — open-logit yes/no evidence
// Lookup falls back by stripping trailing ":"-segments from the tag, so a
// fixture may script "ask:p1" once for every chapter and candidate. An
// unmatched tag yields a hash-derived filler string.
class MockModelProvider : public ModelProvider {
 public:
  explicit MockModelProvider(json fixture);
  static std::shared_ptr<MockModelProvider> from_file(const std::filesystem::path& path);

  Completion complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  const json* lookup(const std::string& tag) const;
  json fixture_;
};

// Chat-completion HTTP backend: POST <uri>/v1/chat/completions with body
// {model, messages, temperature, max_tokens, seed, logprobs, top_logprobs}.
class HttpModelProvider : public ModelProvider {
 public:
  HttpModelProvider(const ResourceDescriptor& desc, std::string bearer_secret);
  Completion complete(const std::string& prompt, const GenerationParams& params) override;

 private:
  std::string base_url_;
  std::string model_;
  std::string secret_;
  ResourceLimits limits_;
  bool want_logprobs_;
};

// Registry of descriptors and provider factories; resolution is idempotent
// (handles are cached by resource id).
class ResourceManager {
 public:
  ResourceManager();

  void add(const ResourceDescriptor& desc);
  void load_catalog(const std::filesystem::path& file);
  std::optional<ResourceDescriptor> descriptor(const std::string& resource_id) const;
  std::vector<std::string> ids() const;

  std::shared_ptr<ResourceHandle> resolve(const std::string& resource_id);
  std::shared_ptr<ResourceHandle> resolve(const ResourceDescriptor& desc);

  // In-process tools, addressed as tool://<name>.
  void register_tool(ToolDefinition tool);

  // Binds an explicit provider instance to an id (tests, fault wrappers).
  void bind_model_provider(const std::string& resource_id,
                           std::shared_ptr<ModelProvider> provider);

 private:
  std::shared_ptr<ResourceHandle> make_handle(const ResourceDescriptor& desc);

  mutable std::mutex mu_;
  std::map<std::string, ResourceDescriptor> catalog_;
  std::map<std::string, std::shared_ptr<ResourceHandle>> handles_;
  std::map<std::string, std::shared_ptr<ModelProvider>> bound_providers_;
  std::map<std::string, std::shared_ptr<ToolDefinition>> tools_;
};

}  // namespace hawk::res
