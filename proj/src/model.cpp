#include "hawk/model.hpp"

#include <algorithm>
#include <functional>
#include <regex>
#include <set>
#include <sstream>

#include "hawk/errors.hpp"
#include "hawk/util.hpp"

namespace hawk::model {

std::string to_string(OperatorKind kind) {
  switch (kind) {
    case OperatorKind::environment: return "environment";
    case OperatorKind::memory: return "memory";
    case OperatorKind::task_management: return "task-management";
    case OperatorKind::task_optimizer: return "task-optimizer";
    case OperatorKind::reasoning: return "reasoning";
    case OperatorKind::security: return "security";
  }
  return "unknown";
}

std::optional<OperatorKind> operator_kind_from_string(const std::string& s) {
  if (s == "environment") return OperatorKind::environment;
  if (s == "memory") return OperatorKind::memory;
  if (s == "task-management") return OperatorKind::task_management;
  if (s == "task-optimizer") return OperatorKind::task_optimizer;
  if (s == "reasoning") return OperatorKind::reasoning;
  if (s == "security") return OperatorKind::security;
  return std::nullopt;
}

json TaskSpec::to_json() const {
  return json{{"task_id", task_id},
              {"kind", kind},
              {"parameters", parameters},
              {"constraints", constraints}};
}

const TaskNode* WorkflowSpec::find_node(const std::string& node_id) const {
  for (const auto& n : nodes)
    if (n.node_id == node_id) return &n;
  return nullptr;
}

namespace {

json node_to_json(const TaskNode& n) {
  return json{{"node_id", n.node_id},
              {"operator_kind", to_string(n.operator_kind)},
              {"params", n.params},
              {"depends_on", n.depends_on},
              {"retry_policy",
               {{"max_attempts", n.retry_policy.max_attempts},
                {"backoff_base", n.retry_policy.backoff_base_ms},
                {"backoff_factor", n.retry_policy.backoff_factor}}}};
}

void require_keys(const json& obj, const std::set<std::string>& allowed,
                  const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw Error(ErrorCode::schema_error, where + ": unknown key '" + it.key() + "'");
  }
}

TaskNode node_from_json(const json& jn) {
  if (!jn.is_object()) throw Error(ErrorCode::schema_error, "node must be an object");
  require_keys(jn, {"node_id", "operator_kind", "params", "depends_on", "retry_policy"},
               "node");
  TaskNode n;
  n.node_id = jn.at("node_id").get<std::string>();
  auto kind = operator_kind_from_string(jn.at("operator_kind").get<std::string>());
  if (!kind)
    throw Error(ErrorCode::schema_error,
                "node '" + n.node_id + "': unknown operator_kind '" +
                    jn.at("operator_kind").get<std::string>() + "'");
  n.operator_kind = *kind;
  n.params = jn.value("params", json::object());
  if (!n.params.is_object())
    throw Error(ErrorCode::schema_error, "node '" + n.node_id + "': params must be an object");
  n.depends_on = jn.value("depends_on", std::vector<std::string>{});
  if (jn.contains("retry_policy")) {
    const auto& rp = jn.at("retry_policy");
    require_keys(rp, {"max_attempts", "backoff_base", "backoff_factor"}, "retry_policy");
    n.retry_policy.max_attempts = rp.value("max_attempts", 1);
    n.retry_policy.backoff_base_ms = rp.value("backoff_base", 0);
    n.retry_policy.backoff_factor = rp.value("backoff_factor", 1.0);
  }
  if (n.retry_policy.max_attempts < 1)
    throw Error(ErrorCode::schema_error, "node '" + n.node_id + "': max_attempts must be >= 1");
  if (n.retry_policy.backoff_factor < 1.0)
    throw Error(ErrorCode::schema_error,
                "node '" + n.node_id + "': backoff_factor must be >= 1");
  return n;
}

}  // namespace

json WorkflowSpec::to_json() const {
  json jnodes = json::array();
  for (const auto& n : nodes) jnodes.push_back(node_to_json(n));
  return json{{"spec_id", spec_id},
              {"concurrency_cap", concurrency_cap},
              {"nodes", jnodes},
              {"metadata", metadata}};
}

json ValidationReport::to_json() const {
  json arr = json::array();
  for (const auto& v : violations)
    arr.push_back({{"kind", v.kind}, {"message", v.message}, {"nodes", v.nodes}});
  return json{{"ok", ok()}, {"violations", arr}};
}

WorkflowSpec workflow_spec_from_json(const json& doc) {
  if (!doc.is_object()) throw Error(ErrorCode::schema_error, "spec must be an object");
  require_keys(doc, {"spec_id", "concurrency_cap", "nodes", "metadata"}, "spec");
  WorkflowSpec spec;
  spec.spec_id = doc.at("spec_id").get<std::string>();
  spec.concurrency_cap = doc.value("concurrency_cap", 5);
  if (spec.concurrency_cap < 1)
    throw Error(ErrorCode::schema_error, "concurrency_cap must be >= 1");
  if (doc.contains("metadata"))
    spec.metadata = doc.at("metadata").get<std::map<std::string, std::string>>();
  for (const auto& jn : doc.at("nodes")) spec.nodes.push_back(node_from_json(jn));
  return spec;
}

WorkflowSpec load_workflow_spec(const std::filesystem::path& file) {
  json doc;
  try {
    doc = json::parse(util::read_file(file));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_error, file.string() + ": " + e.what());
  }
  return workflow_spec_from_json(doc);
}

// --- template catalog ------------------------------------------------------

WorkflowTemplate template_from_json(const json& doc) {
  require_keys(doc,
               {"kind", "keywords", "parameters", "constraints", "nodes",
                "concurrency_cap", "allow_empty", "nodes_from_param"},
               "template");
  WorkflowTemplate t;
  t.kind = doc.at("kind").get<std::string>();
  t.keywords = doc.value("keywords", std::vector<std::string>{});
  t.constraints = doc.value("constraints", std::vector<std::string>{});
  t.concurrency_cap = doc.value("concurrency_cap", 5);
  t.allow_empty = doc.value("allow_empty", false);
  t.nodes_from_param = doc.value("nodes_from_param", std::string{});
  if (doc.contains("parameters")) {
    for (auto it = doc.at("parameters").begin(); it != doc.at("parameters").end(); ++it) {
      const auto& jp = it.value();
      require_keys(jp, {"type", "default", "extract_regex", "required"}, "parameter");
      WorkflowTemplate::ParamSpec ps;
      ps.type = jp.value("type", "string");
      ps.default_value = jp.contains("default") ? jp.at("default") : json();
      ps.extract_regex = jp.value("extract_regex", std::string{});
      ps.required = jp.value("required", false);
      t.parameters[it.key()] = std::move(ps);
    }
  }
  if (doc.contains("nodes"))
    for (const auto& jn : doc.at("nodes")) t.nodes.push_back(node_from_json(jn));
  return t;
}

void TemplateCatalog::add(WorkflowTemplate tmpl) {
  templates_[tmpl.kind] = std::move(tmpl);
}

const WorkflowTemplate* TemplateCatalog::find(const std::string& kind) const {
  auto it = templates_.find(kind);
  return it == templates_.end() ? nullptr : &it->second;
}

std::vector<std::string> TemplateCatalog::kinds() const {
  std::vector<std::string> out;
  for (const auto& [k, _] : templates_) out.push_back(k);
  return out;  // map iteration is already sorted
}

TemplateCatalog TemplateCatalog::load_dir(const std::filesystem::path& dir) {
  TemplateCatalog catalog;
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::io_error, "template directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    json doc;
    try {
      doc = json::parse(util::read_file(f));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::schema_error, f.string() + ": " + e.what());
    }
    catalog.add(template_from_json(doc));
  }
  return catalog;
}

// --- user layer operations -------------------------------------------------

namespace {

json parse_typed_value(const std::string& type, const std::string& raw,
                       const std::string& name) {
  try {
    if (type == "int") {
      std::size_t used = 0;
      long long v = std::stoll(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return json(v);
    }
    if (type == "real") {
      std::size_t used = 0;
      double v = std::stod(raw, &used);
      if (used != raw.size()) throw std::invalid_argument(raw);
      return json(v);
    }
    if (type == "bool") {
      if (raw == "true" || raw == "1") return json(true);
      if (raw == "false" || raw == "0") return json(false);
      throw std::invalid_argument(raw);
    }
    return json(raw);
  } catch (const std::exception&) {
    throw Error(ErrorCode::malformed_option,
                "option '" + name + "': '" + raw + "' is not a valid " + type);
  }
}

bool keyword_hit(const std::string& lowered_text, const std::string& keyword) {
  // Whole-word match; keywords are single lowercase words.
  std::size_t pos = 0;
  while ((pos = lowered_text.find(keyword, pos)) != std::string::npos) {
    bool left_ok = pos == 0 || !std::isalnum(static_cast<unsigned char>(lowered_text[pos - 1]));
    std::size_t end = pos + keyword.size();
    bool right_ok =
        end >= lowered_text.size() || !std::isalnum(static_cast<unsigned char>(lowered_text[end]));
    if (left_ok && right_ok) return true;
    pos = end;
  }
  return false;
}

}  // namespace

TaskSpec parse_task_request(const TaskRequest& req, const TemplateCatalog& catalog) {
  std::string text = util::trim(req.raw_text);
  if (text.empty())
    throw Error(ErrorCode::unrecognized_task_kind, "request text is empty");

  std::string kind;
  if (auto it = req.options.find("kind"); it != req.options.end()) {
    if (!catalog.find(it->second))
      throw Error(ErrorCode::unrecognized_task_kind, "unknown kind '" + it->second + "'");
    kind = it->second;  // explicit option overrides text inference
  } else {
    std::string lowered = util::to_lower(text);
    for (const auto& k : catalog.kinds()) {
      const auto* tmpl = catalog.find(k);
      for (const auto& kw : tmpl->keywords) {
        if (keyword_hit(lowered, kw)) {
          kind = k;
          break;
        }
      }
      if (!kind.empty()) break;
    }
    if (kind.empty())
      throw Error(ErrorCode::unrecognized_task_kind, "no template matches: " + text);
  }

  const auto* tmpl = catalog.find(kind);
  TaskSpec spec;
  spec.kind = kind;
  spec.constraints = tmpl->constraints;
  spec.parameters = json::object();

  for (const auto& [name, ps] : tmpl->parameters) {
    json value = ps.default_value;
    if (!ps.extract_regex.empty()) {
      std::smatch m;
      if (std::regex_search(text, m, std::regex(ps.extract_regex))) {
        std::string raw = m.size() > 1 ? m[1].str() : m[0].str();
        value = parse_typed_value(ps.type, raw, name);
      }
    }
    if (auto it = req.options.find(name); it != req.options.end())
      value = parse_typed_value(ps.type, it->second, name);
    if (value.is_null()) {
      if (ps.required)
        throw Error(ErrorCode::malformed_option, "missing required option '" + name + "'");
      continue;
    }
    spec.parameters[name] = value;
  }

  for (const auto& [name, _] : req.options) {
    if (name == "kind") continue;
    if (!tmpl->parameters.count(name))
      throw Error(ErrorCode::malformed_option,
                  "option '" + name + "' is not declared by template '" + kind + "'");
  }

  std::string fingerprint = text + "\n" + json(req.options).dump();
  std::ostringstream id;
  id << kind << "-" << std::hex << util::fnv1a64(fingerprint);
  spec.task_id = id.str();
  return spec;
}

namespace {

// Substitutes ${name} in every string leaf; records unresolved names.
json substitute(const json& value, const json& params, std::set<std::string>& unresolved) {
  if (value.is_string()) {
    const std::string& s = value.get_ref<const std::string&>();
    // A bare "${name}" placeholder keeps the parameter's JSON type.
    if (s.size() > 3 && s.rfind("${", 0) == 0 && s.back() == '}' &&
        s.find('}') == s.size() - 1) {
      std::string name = s.substr(2, s.size() - 3);
      if (params.contains(name)) return params.at(name);
      unresolved.insert(name);
      return value;
    }
    std::string out;
    std::size_t pos = 0;
    while (pos < s.size()) {
      std::size_t open = s.find("${", pos);
      if (open == std::string::npos) {
        out += s.substr(pos);
        break;
      }
      std::size_t close = s.find('}', open);
      if (close == std::string::npos) {
        out += s.substr(pos);
        break;
      }
      out += s.substr(pos, open - pos);
      std::string name = s.substr(open + 2, close - open - 2);
      if (params.contains(name)) {
        const json& v = params.at(name);
        out += v.is_string() ? v.get<std::string>() : v.dump();
      } else {
        unresolved.insert(name);
        out += s.substr(open, close - open + 1);
      }
      pos = close + 1;
    }
    return json(out);
  }
  if (value.is_object()) {
    json out = json::object();
    for (auto it = value.begin(); it != value.end(); ++it)
      out[it.key()] = substitute(it.value(), params, unresolved);
    return out;
  }
  if (value.is_array()) {
    json out = json::array();
    for (const auto& v : value) out.push_back(substitute(v, params, unresolved));
    return out;
  }
  return value;
}

}  // namespace

WorkflowSpec instantiate_workflow(const TaskSpec& spec_req, const TemplateCatalog& catalog) {
  const auto* tmpl = catalog.find(spec_req.kind);
  if (!tmpl)
    throw Error(ErrorCode::template_not_found, "no template for kind '" + spec_req.kind + "'");

  WorkflowSpec spec;
  spec.spec_id = "wf-" + spec_req.task_id;
  spec.concurrency_cap = tmpl->concurrency_cap;
  spec.metadata["kind"] = spec_req.kind;

  std::vector<TaskNode> nodes = tmpl->nodes;
  if (!tmpl->nodes_from_param.empty()) {
    if (!spec_req.parameters.contains(tmpl->nodes_from_param)) {
      if (!tmpl->allow_empty)
        throw Error(ErrorCode::unresolved_placeholder,
                    "missing parameter '" + tmpl->nodes_from_param + "' (node source)");
    } else {
      auto path = spec_req.parameters.at(tmpl->nodes_from_param).get<std::string>();
      WorkflowSpec inner = load_workflow_spec(path);
      nodes = inner.nodes;
      spec.concurrency_cap = inner.concurrency_cap;
      for (const auto& [k, v] : inner.metadata) spec.metadata[k] = v;
    }
  }

  if (nodes.empty() && !tmpl->allow_empty)
    throw Error(ErrorCode::unresolved_placeholder, "template yields no nodes");

  std::set<std::string> unresolved;
  for (auto& node : nodes) {
    node.params = substitute(node.params, spec_req.parameters, unresolved);
    spec.nodes.push_back(std::move(node));
  }
  if (!unresolved.empty()) {
    std::string names;
    for (const auto& n : unresolved) names += (names.empty() ? "" : ", ") + n;
    throw Error(ErrorCode::unresolved_placeholder, names);
  }

  auto report = validate_workflow(spec);
  if (!report.ok())
    throw Error(ErrorCode::schema_error,
                "template '" + spec_req.kind + "' produced an invalid spec: " +
                    report.violations.front().message);
  return spec;
}

ValidationReport validate_workflow(const WorkflowSpec& spec) {
  ValidationReport report;

  std::map<std::string, int> index;
  for (std::size_t i = 0; i < spec.nodes.size(); ++i) {
    const auto& id = spec.nodes[i].node_id;
    if (index.count(id)) {
      report.violations.push_back(
          {"duplicate_id", "node id '" + id + "' appears more than once", {id}});
    } else {
      index[id] = static_cast<int>(i);
    }
  }

  for (const auto& node : spec.nodes) {
    for (const auto& dep : node.depends_on) {
      if (!index.count(dep))
        report.violations.push_back({"dangling_dependency",
                                     "node '" + node.node_id + "' depends on unknown '" + dep + "'",
                                     {node.node_id, dep}});
    }
  }

  // Iterative DFS, colored; on a back edge the gray stack tail is the cycle.
  enum Color { white, gray, black };
  std::vector<Color> color(spec.nodes.size(), white);
  std::vector<std::string> stack;

  std::function<bool(int)> visit = [&](int u) -> bool {
    color[u] = gray;
    stack.push_back(spec.nodes[u].node_id);
    for (const auto& dep : spec.nodes[u].depends_on) {
      auto it = index.find(dep);
      if (it == index.end()) continue;
      int v = it->second;
      if (color[v] == gray) {
        auto begin = std::find(stack.begin(), stack.end(), dep);
        std::vector<std::string> cycle(begin, stack.end());
        std::string msg = "cycle: ";
        for (std::size_t i = 0; i < cycle.size(); ++i)
          msg += (i ? " -> " : "") + cycle[i];
        report.violations.push_back({"cycle", msg, cycle});
        return true;
      }
      if (color[v] == white && visit(v)) return true;
    }
    stack.pop_back();
    color[u] = black;
    return false;
  };

  for (std::size_t i = 0; i < spec.nodes.size(); ++i)
    if (color[i] == white && visit(static_cast<int>(i))) break;  // report first cycle

  return report;
}

}  // namespace hawk::model
