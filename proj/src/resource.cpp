#include "hawk/resource.hpp"

#include <algorithm>
#include <cstdlib>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::res {

std::string to_string(ResourceKind kind) {
  switch (kind) {
    case ResourceKind::data: return "data";
    case ResourceKind::model: return "model";
    case ResourceKind::device: return "device";
    case ResourceKind::tool: return "tool";
  }
  return "unknown";
}

std::optional<ResourceKind> resource_kind_from_string(const std::string& s) {
  if (s == "data") return ResourceKind::data;
  if (s == "model") return ResourceKind::model;
  if (s == "device") return ResourceKind::device;
  if (s == "tool") return ResourceKind::tool;
  return std::nullopt;
}

json ResourceDescriptor::to_json() const {
  json j{{"resource_id", resource_id},
         {"kind", to_string(kind)},
         {"uri", uri},
         {"limits",
          {{"max_concurrent", limits.max_concurrent},
           {"timeout_ms", limits.timeout_ms},
           {"max_retries", limits.max_retries}}}};
  if (!auth_env.empty()) j["auth"] = auth_env;
  if (supports_logprobs) j["supports_logprobs"] = true;
  if (!model.empty()) j["model"] = model;
  return j;
}

ResourceDescriptor ResourceDescriptor::from_json(const json& doc) {
  ResourceDescriptor d;
  d.resource_id = doc.at("resource_id").get<std::string>();
  auto kind = resource_kind_from_string(doc.at("kind").get<std::string>());
  if (!kind)
    throw Error(ErrorCode::schema_error,
                "resource '" + d.resource_id + "': unknown kind");
  d.kind = *kind;
  d.uri = doc.at("uri").get<std::string>();
  d.auth_env = doc.value("auth", std::string{});
  d.supports_logprobs = doc.value("supports_logprobs", false);
  d.model = doc.value("model", std::string{});
  if (doc.contains("limits")) {
    const auto& jl = doc.at("limits");
    d.limits.max_concurrent = jl.value("max_concurrent", 4);
    d.limits.timeout_ms = jl.value("timeout_ms", std::int64_t{30000});
    d.limits.max_retries = jl.value("max_retries", 0);
  }
  if (d.limits.max_concurrent < 1)
    throw Error(ErrorCode::schema_error, "max_concurrent must be >= 1");
  return d;
}

std::optional<bool> parse_yes_no(const std::string& text) {
  std::string t = util::to_lower(util::trim(text));
  while (!t.empty() && (t.back() == '.' || t.back() == '!' || t.back() == ',')) t.pop_back();
  if (t == "yes") return true;
  if (t == "no") return false;
  return std::nullopt;
}

// --- mock provider -----------------------------------------------------------

MockModelProvider::MockModelProvider(json fixture) : fixture_(std::move(fixture)) {
  if (fixture_.is_null()) fixture_ = json::object();
  if (!fixture_.is_object())
    throw Error(ErrorCode::schema_error, "mock fixture must be a JSON object");
}

std::shared_ptr<MockModelProvider> MockModelProvider::from_file(
    const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return std::make_shared<MockModelProvider>(json::object());
  return std::make_shared<MockModelProvider>(json::parse(util::read_file(path)));
}

const json* MockModelProvider::lookup(const std::string& tag) const {
  std::string t = tag;
  while (true) {
    if (auto it = fixture_.find(t); it != fixture_.end()) return &*it;
    auto pos = t.rfind(':');
    if (pos == std::string::npos) return nullptr;
    t.resize(pos);
  }
}

Completion MockModelProvider::complete(const std::string& prompt,
                                       const GenerationParams& params) {
  std::string tag = prompt.substr(0, prompt.find('\n'));
  std::uint64_t seed = params.seed.value_or(0);

  const json* entry = lookup(tag);
  Completion out;
  out.usage.prompt_tokens = static_cast<int>(prompt.size() / 4);
  if (!entry) {
    std::ostringstream filler;
    filler << "mock:" << std::hex << util::fnv1a64(tag + "#" + std::to_string(seed));
    out.text = filler.str();
  } else if (entry->contains("text")) {
    out.text = entry->at("text").get<std::string>();
  } else if (entry->contains("samples")) {
    const auto& samples = entry->at("samples");
    if (samples.empty()) throw Error(ErrorCode::schema_error, "fixture samples empty: " + tag);
    out.text = samples.at(seed % samples.size()).get<std::string>();
  } else if (entry->contains("logits")) {
    double v_yes = entry->at("logits").at("yes").get<double>();
    double v_no = entry->at("logits").at("no").get<double>();
    out.text = v_yes >= v_no ? "Yes" : "No";
    out.token_logits.push_back(
        {out.text, {{"Yes", v_yes}, {"No", v_no}}});
  } else {
    throw Error(ErrorCode::schema_error, "fixture entry has no text/samples/logits: " + tag);
  }
  out.usage.completion_tokens = static_cast<int>(out.text.size() / 4);
  return out;
}

// --- http provider -----------------------------------------------------------

HttpModelProvider::HttpModelProvider(const ResourceDescriptor& desc, std::string bearer_secret)
    : base_url_(desc.uri),
      model_(desc.model.empty() ? "default" : desc.model),
      secret_(std::move(bearer_secret)),
      limits_(desc.limits),
      want_logprobs_(desc.supports_logprobs) {
  while (!base_url_.empty() && base_url_.back() == '/') base_url_.pop_back();
}

Completion HttpModelProvider::complete(const std::string& prompt,
                                       const GenerationParams& params) {
  httplib::Client client(base_url_);
  client.set_connection_timeout(std::chrono::milliseconds(limits_.timeout_ms));
  client.set_read_timeout(std::chrono::milliseconds(limits_.timeout_ms));
  client.set_write_timeout(std::chrono::milliseconds(limits_.timeout_ms));

  json body{{"model", model_},
            {"messages", json::array({{{"role", "user"}, {"content", prompt}}})},
            {"temperature", params.temperature},
            {"max_tokens", params.max_tokens}};
  if (params.seed) body["seed"] = *params.seed;
  if (want_logprobs_) {
    body["logprobs"] = true;
    body["top_logprobs"] = 5;
  }

  httplib::Headers headers;
  if (!secret_.empty()) headers.emplace("Authorization", "Bearer " + secret_);

  auto resp = client.Post("/v1/chat/completions", headers, body.dump(), "application/json");
  if (!resp) {
    bool timeout = resp.error() == httplib::Error::ConnectionTimeout ||
                   resp.error() == httplib::Error::Read || resp.error() == httplib::Error::Write;
    throw BackendError(timeout ? BackendError::Class::timeout : BackendError::Class::http, true,
                       "request failed: " + httplib::to_string(resp.error()));
  }
  if (resp->status == 429)
    throw Error(ErrorCode::rate_limited, "backend returned 429");
  if (resp->status >= 500)
    throw BackendError(BackendError::Class::http, true,
                       "backend status " + std::to_string(resp->status));
  if (resp->status != 200)
    throw BackendError(BackendError::Class::http, false,
                       "backend status " + std::to_string(resp->status));

  try {
    json doc = json::parse(resp->body);
    const auto& choice = doc.at("choices").at(0);
    Completion out;
    out.text = choice.at("message").at("content").get<std::string>();
    std::string reason = choice.value("finish_reason", "stop");
    out.finish_reason = reason == "length" ? FinishReason::length
                        : reason == "stop" ? FinishReason::stop
                                           : FinishReason::error;
    if (choice.contains("logprobs") && choice.at("logprobs").is_object() &&
        choice.at("logprobs").contains("content")) {
      for (const auto& tok : choice.at("logprobs").at("content")) {
        TokenLogits tl;
        tl.token = tok.at("token").get<std::string>();
        if (tok.contains("top_logprobs"))
          for (const auto& alt : tok.at("top_logprobs"))
            tl.alternatives.push_back(
                {alt.at("token").get<std::string>(), alt.at("logprob").get<double>()});
        out.token_logits.push_back(std::move(tl));
      }
    }
    if (doc.contains("usage")) {
      out.usage.prompt_tokens = doc.at("usage").value("prompt_tokens", 0);
      out.usage.completion_tokens = doc.at("usage").value("completion_tokens", 0);
    }
    return out;
  } catch (const json::exception& e) {
    throw BackendError(BackendError::Class::parse, false,
                       std::string("malformed backend response: ") + e.what());
  }
}

// --- handle -------------------------------------------------------------------

class ResourceHandle::GateGuard {
 public:
  explicit GateGuard(ResourceHandle& h) : h_(h) {
    std::unique_lock lock(h_.gate_mu_);
    h_.gate_cv_.wait(lock, [&] { return h_.in_flight_ < h_.desc_.limits.max_concurrent; });
    h_.in_flight_ += 1;
    h_.max_in_flight_ = std::max(h_.max_in_flight_, h_.in_flight_);
  }
  ~GateGuard() {
    {
      std::lock_guard lock(h_.gate_mu_);
      h_.in_flight_ -= 1;
    }
    h_.gate_cv_.notify_one();
  }

 private:
  ResourceHandle& h_;
};

ResourceHandle::ResourceHandle(ResourceDescriptor desc, std::shared_ptr<ModelProvider> model,
                               std::shared_ptr<ToolDefinition> tool)
    : desc_(std::move(desc)), model_(std::move(model)), tool_(std::move(tool)) {}

int ResourceHandle::max_in_flight_seen() const {
  std::lock_guard lock(gate_mu_);
  return max_in_flight_;
}

Completion ResourceHandle::complete_with_retries(const std::string& prompt,
                                                 const GenerationParams& params) {
  std::mt19937_64 rng(util::fnv1a64(prompt) ^ params.seed.value_or(0));
  int attempt = 0;
  while (true) {
    try {
      GateGuard gate(*this);
      return model_->complete(prompt, params);
    } catch (const BackendError& e) {
      if (!e.retriable() || attempt >= desc_.limits.max_retries) throw;
      std::uniform_int_distribution<std::int64_t> jitter(0, 10 * (1LL << attempt));
      std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
      ++attempt;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::rate_limited || attempt >= desc_.limits.max_retries) throw;
      std::uniform_int_distribution<std::int64_t> jitter(0, 50 * (1LL << attempt));
      std::this_thread::sleep_for(std::chrono::milliseconds(jitter(rng)));
      ++attempt;
    }
  }
}

GenerateResult ResourceHandle::generate(const std::string& prompt,
                                        const GenerationParams& params) {
  if (desc_.kind != ResourceKind::model)
    throw Error(ErrorCode::schema_mismatch,
                "resource '" + desc_.resource_id + "' is not a model");
  if (params.n_samples <= 1) return complete_with_retries(prompt, params);

  SampleSet set;
  std::uint64_t base = params.seed.value_or(0);
  for (int i = 0; i < params.n_samples; ++i) {
    GenerationParams one = params;
    one.n_samples = 1;
    one.seed = base + static_cast<std::uint64_t>(i);
    Completion c = complete_with_retries(prompt, one);
    set.usage.prompt_tokens += c.usage.prompt_tokens;
    set.usage.completion_tokens += c.usage.completion_tokens;
    set.texts.push_back(std::move(c.text));
  }
  return set;
}

YesNoEvidence ResourceHandle::ask_yes_no(const std::string& question,
                                         const GenerationParams& params) {
  if (desc_.kind != ResourceKind::model)
    throw Error(ErrorCode::schema_mismatch,
                "resource '" + desc_.resource_id + "' is not a model");
  std::string prompt = question + "\nAnswer exactly Yes or No.";

  if (desc_.supports_logprobs) {
    GenerationParams one = params;
    one.n_samples = 1;
    Completion c = complete_with_retries(prompt, one);
    if (c.token_logits.empty())
      throw BackendError(BackendError::Class::parse, false,
                         "open-logit backend returned no token logits");
    std::optional<double> v_yes, v_no;
    for (const auto& alt : c.token_logits.front().alternatives) {
      auto parsed = parse_yes_no(alt.token);
      if (parsed && *parsed && !v_yes) v_yes = alt.logit;
      if (parsed && !*parsed && !v_no) v_no = alt.logit;
    }
    if (!v_yes || !v_no)
      throw BackendError(BackendError::Class::parse, false,
                         "yes/no alternatives missing from first answer token");
    return LogitEvidence{*v_yes, *v_no};
  }

  int n = std::max(params.n_samples, 1);
  GenerationParams sampled = params;
  sampled.n_samples = n;
  GenerateResult result = generate(prompt, sampled);
  SampleEvidence evidence;
  auto count = [&](const std::string& text) {
    auto parsed = parse_yes_no(text);
    if (!parsed)
      evidence.unparseable += 1;
    else if (*parsed)
      evidence.m_yes += 1;
    else
      evidence.m_no += 1;
  };
  if (std::holds_alternative<Completion>(result))
    count(std::get<Completion>(result).text);
  else
    for (const auto& t : std::get<SampleSet>(result).texts) count(t);
  if (evidence.m_yes + evidence.m_no == 0)
    throw Error(ErrorCode::no_parseable_answers,
                std::to_string(evidence.unparseable) + " samples, none parseable");
  return evidence;
}

json ResourceHandle::invoke_tool(const json& args) {
  if (desc_.kind != ResourceKind::tool || !tool_)
    throw Error(ErrorCode::schema_mismatch,
                "resource '" + desc_.resource_id + "' is not a tool");
  auto violations = op::validate_output(tool_->input_schema, args);
  if (!violations.empty()) {
    std::string msg;
    for (const auto& v : violations) msg += (msg.empty() ? "" : "; ") + v.message;
    throw Error(ErrorCode::schema_mismatch, msg);
  }
  GateGuard gate(*this);
  try {
    return tool_->fn(args);
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorCode::tool_error, e.what());
  }
}

// --- manager ------------------------------------------------------------------

ResourceManager::ResourceManager() {
  // word-count ships as the reference tool.
  ToolDefinition wc;
  wc.name = "word-count";
  wc.input_schema.name = "word-count-args";
  wc.input_schema.required_fields = {{"text", "string", false, {}}};
  wc.fn = [](const json& args) {
    std::istringstream in(args.at("text").get<std::string>());
    std::string token;
    int count = 0;
    while (in >> token) ++count;
    return json{{"count", count}};
  };
  register_tool(std::move(wc));
}

void ResourceManager::add(const ResourceDescriptor& desc) {
  std::lock_guard lock(mu_);
  catalog_[desc.resource_id] = desc;
  handles_.erase(desc.resource_id);
}

void ResourceManager::load_catalog(const std::filesystem::path& file) {
  json doc = json::parse(util::read_file(file));
  if (!doc.is_array())
    throw Error(ErrorCode::schema_error, "resource catalog must be a JSON array");
  for (const auto& jd : doc) {
    auto desc = ResourceDescriptor::from_json(jd);
    // Relative mock paths resolve against the catalog file's directory.
    if (desc.uri.rfind("mock://", 0) == 0) {
      std::filesystem::path p = desc.uri.substr(7);
      if (p.is_relative()) desc.uri = "mock://" + (file.parent_path() / p).string();
    }
    add(desc);
  }
}

std::optional<ResourceDescriptor> ResourceManager::descriptor(
    const std::string& resource_id) const {
  std::lock_guard lock(mu_);
  auto it = catalog_.find(resource_id);
  if (it == catalog_.end()) return std::nullopt;
  return it->second;
}

std::vector<std::string> ResourceManager::ids() const {
  std::lock_guard lock(mu_);
  std::vector<std::string> out;
  for (const auto& [id, _] : catalog_) out.push_back(id);
  return out;
}

void ResourceManager::register_tool(ToolDefinition tool) {
  std::lock_guard lock(mu_);
  auto name = tool.name;
  tools_[name] = std::make_shared<ToolDefinition>(std::move(tool));
  ResourceDescriptor desc;
  desc.resource_id = name;
  desc.kind = ResourceKind::tool;
  desc.uri = "tool://" + name;
  catalog_[desc.resource_id] = desc;
  handles_.erase(desc.resource_id);
}

void ResourceManager::bind_model_provider(const std::string& resource_id,
                                          std::shared_ptr<ModelProvider> provider) {
  std::lock_guard lock(mu_);
  bound_providers_[resource_id] = std::move(provider);
  handles_.erase(resource_id);
}

std::shared_ptr<ResourceHandle> ResourceManager::make_handle(const ResourceDescriptor& desc) {
  std::shared_ptr<ModelProvider> model;
  std::shared_ptr<ToolDefinition> tool;

  if (auto it = bound_providers_.find(desc.resource_id); it != bound_providers_.end()) {
    model = it->second;
  } else if (desc.kind == ResourceKind::model) {
    if (desc.uri.rfind("mock://", 0) == 0) {
      model = MockModelProvider::from_file(desc.uri.substr(7));
    } else if (desc.uri.rfind("http://", 0) == 0 || desc.uri.rfind("https://", 0) == 0) {
      std::string secret;
      if (!desc.auth_env.empty()) {
        const char* v = std::getenv(desc.auth_env.c_str());
        if (!v)
          throw Error(ErrorCode::auth_missing,
                      "env var '" + desc.auth_env + "' for '" + desc.resource_id + "'");
        secret = v;
      }
      model = std::make_shared<HttpModelProvider>(desc, secret);
    } else {
      throw Error(ErrorCode::no_provider,
                  "no model provider for uri scheme of '" + desc.uri + "'");
    }
  } else if (desc.kind == ResourceKind::tool) {
    std::string name =
        desc.uri.rfind("tool://", 0) == 0 ? desc.uri.substr(7) : desc.resource_id;
    auto it = tools_.find(name);
    if (it == tools_.end())
      throw Error(ErrorCode::no_provider, "no tool registered as '" + name + "'");
    tool = it->second;
  } else {
    // data and device resources are catalogued but have no shipped provider
    throw Error(ErrorCode::no_provider,
                "no provider for kind '" + to_string(desc.kind) + "'");
  }
  return std::make_shared<ResourceHandle>(desc, std::move(model), std::move(tool));
}

std::shared_ptr<ResourceHandle> ResourceManager::resolve(const std::string& resource_id) {
  std::lock_guard lock(mu_);
  if (auto it = handles_.find(resource_id); it != handles_.end()) return it->second;
  auto it = catalog_.find(resource_id);
  if (it == catalog_.end())
    throw Error(ErrorCode::no_provider, "unknown resource '" + resource_id + "'");
  auto handle = make_handle(it->second);
  handles_[resource_id] = handle;
  return handle;
}

std::shared_ptr<ResourceHandle> ResourceManager::resolve(const ResourceDescriptor& desc) {
  {
    std::lock_guard lock(mu_);
    if (!catalog_.count(desc.resource_id)) catalog_[desc.resource_id] = desc;
  }
  return resolve(desc.resource_id);
}

}  // namespace hawk::res
