#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "hawk/creagentive.hpp"
#include "hawk/dispatch.hpp"
#include "hawk/dnf.hpp"
#include "hawk/engine.hpp"
#include "hawk/errors.hpp"
#include "hawk/model.hpp"
#include "hawk/registry.hpp"
#include "hawk/resource.hpp"
#include "hawk/util.hpp"
#include "hawk/version_store.hpp"

namespace {

using json = nlohmann::json;
using namespace hawk;

constexpr int kExitOk = 0;
constexpr int kExitDomain = 1;
constexpr int kExitUsage = 2;
constexpr int kExitEnvironment = 3;

int exit_code_for(const Error& e) {
  switch (e.code()) {
    case ErrorCode::io_error:
    case ErrorCode::missing_file:
    case ErrorCode::no_provider:
    case ErrorCode::auth_missing:
    case ErrorCode::backend_error:
    case ErrorCode::rate_limited:
    case ErrorCode::endpoint_unreachable:
      return kExitEnvironment;
    case ErrorCode::usage_error:
      return kExitUsage;
    default:
      return kExitDomain;
  }
}

std::string env_or(const char* name, const std::string& fallback) {
  const char* v = std::getenv(name);
  return v ? std::string(v) : fallback;
}

model::TemplateCatalog load_catalog(const std::string& templates_dir) {
  if (!templates_dir.empty()) return model::TemplateCatalog::load_dir(templates_dir);
  return model::TemplateCatalog::builtin();
}

struct CommonState {
  bool json_output = false;
};

void print_doc(const CommonState& state, const json& doc, const std::string& human) {
  if (state.json_output)
    std::cout << doc.dump(2) << "\n";
  else
    std::cout << human;
}

// --- run ------------------------------------------------------------------

int cmd_run(const std::string& spec_file, std::uint64_t seed, int parallelism,
            const std::string& resources_file, const std::string& registry_file,
            const std::string& store_root, const std::string& events_file,
            const CommonState& state) {
  auto spec = model::load_workflow_spec(spec_file);
  auto report = model::validate_workflow(spec);
  if (!report.ok()) {
    print_doc(state, report.to_json(), "invalid spec:\n");
    if (!state.json_output)
      for (const auto& v : report.violations) std::cout << "  " << v.message << "\n";
    return kExitDomain;
  }

  std::unique_ptr<op::VersionStore> store;
  if (!store_root.empty())
    store = std::make_unique<op::FileVersionStore>(store_root);
  else
    store = std::make_unique<op::InMemoryVersionStore>();

  op::MemoryStore memory;
  agents::Registry registry;
  if (!registry_file.empty()) registry.load_from_file(registry_file);
  res::ResourceManager resources;
  if (!resources_file.empty()) resources.load_catalog(resources_file);

  op::ExecutionContext base;
  base.capabilities = op::open_capabilities();
  base.version_store = store.get();
  base.memory_store = &memory;
  base.registry = &registry;
  base.resources = &resources;
  op::Dispatcher dispatcher(base);

  engine::StrategyParams strategy;
  strategy.parallelism = parallelism > 0 ? parallelism : std::min(4, spec.concurrency_cap);
  auto instance = engine::make_instance(spec, strategy);

  engine::SystemClock clock;
  auto result = engine::execute(instance, dispatcher, clock, seed);

  if (!events_file.empty())
    util::write_file(events_file, engine::to_ndjson(instance.event_log));

  json nodes = json::object();
  for (const auto& [id, st] : instance.node_states)
    nodes[id] = {{"status", engine::to_string(st.status)}, {"attempts", st.attempts}};
  json doc{{"spec_id", spec.spec_id},
           {"all_succeeded", result.all_succeeded},
           {"nodes", nodes}};

  std::string human = "instance " + instance.instance_id + ": " +
                      (result.all_succeeded ? "all nodes succeeded" : "failures present") + "\n";
  for (const auto& [id, st] : instance.node_states)
    human += "  " + id + ": " + engine::to_string(st.status) + " (attempts " +
             std::to_string(st.attempts) + ")\n";
  print_doc(state, doc, human);
  return result.all_succeeded ? kExitOk : kExitDomain;
}

// --- plan / validate --------------------------------------------------------

int cmd_plan(const std::string& spec_file, const CommonState& state) {
  auto spec = model::load_workflow_spec(spec_file);
  auto report = model::validate_workflow(spec);
  if (!report.ok()) {
    print_doc(state, report.to_json(), "invalid spec\n");
    return kExitDomain;
  }
  auto planned = engine::plan(spec);
  std::string human = "[";
  for (std::size_t i = 0; i < planned.stages.size(); ++i) {
    human += i ? ",[" : "[";
    for (std::size_t j = 0; j < planned.stages[i].size(); ++j)
      human += (j ? "," : "") + planned.stages[i][j];
    human += "]";
  }
  human += "]\n";
  print_doc(state, planned.to_json(), human);
  return kExitOk;
}

int cmd_validate(const std::string& spec_file, const CommonState& state) {
  auto spec = model::load_workflow_spec(spec_file);
  auto report = model::validate_workflow(spec);
  std::string human;
  if (report.ok()) {
    human = "ok\n";
  } else {
    for (const auto& v : report.violations) human += v.kind + ": " + v.message + "\n";
  }
  print_doc(state, report.to_json(), human);
  return report.ok() ? kExitOk : kExitDomain;
}

// --- agents -----------------------------------------------------------------

int cmd_agents_list(agents::Registry& registry, const CommonState& state) {
  json arr = json::array();
  std::string human;
  for (const auto& d : registry.all()) {
    arr.push_back(d.to_json());
    std::string caps;
    for (const auto& c : d.spec.capabilities) caps += (caps.empty() ? "" : ",") + c;
    human += d.agent_id + "  " + to_string(d.status) + "  " + to_string(d.health) + "  [" +
             caps + "]\n";
  }
  print_doc(state, arr, human);
  return kExitOk;
}

// --- dnf ---------------------------------------------------------------------

int cmd_dnf_train(const std::string& data_file, int clauses, double lr, int epochs,
                  std::uint64_t seed, double l1, const std::string& out_file,
                  const CommonState& state) {
  auto dataset = dnf::load_dataset(data_file);
  int n_labels = 0;
  for (const auto& ex : dataset) n_labels = std::max(n_labels, ex.label + 1);
  n_labels = std::max(n_labels, 2);

  dnf::TrainOptions options;
  options.lr = lr;
  options.epochs = epochs;
  options.seed = seed;
  options.l1_gate_penalty = l1;
  auto result = dnf::train(dataset, clauses, n_labels, options);
  result.model.save(out_file);

  double acc = dnf::accuracy(result.model, dataset);
  json doc{{"model", out_file},
           {"epochs", epochs},
           {"final_loss", result.loss_curve.back()},
           {"accuracy", acc}};
  char buffer[160];
  std::snprintf(buffer, sizeof(buffer), "trained %d epochs, final loss %.6f, accuracy %.3f\n",
                epochs, result.loss_curve.back(), acc);
  print_doc(state, doc, buffer);
  return kExitOk;
}

int cmd_dnf_eval(const std::string& model_file, const std::string& data_file,
                 const CommonState& state) {
  auto model = dnf::DnfModel::load(model_file);
  auto dataset = dnf::load_dataset(data_file);
  double acc = dnf::accuracy(model, dataset);
  double total = 0.0;
  for (const auto& ex : dataset) total += dnf::loss(model.forward(ex.atoms), ex.label);
  double mean_loss = total / static_cast<double>(dataset.size());
  json doc{{"accuracy", acc}, {"loss", mean_loss}, {"examples", dataset.size()}};
  char buffer[120];
  std::snprintf(buffer, sizeof(buffer), "accuracy %.3f loss %.6f over %zu examples\n", acc,
                mean_loss, dataset.size());
  print_doc(state, doc, buffer);
  return kExitOk;
}

int cmd_dnf_rules(const std::string& model_file, const std::string& manifest_file,
                  const CommonState& state) {
  auto model = dnf::DnfModel::load(model_file);
  std::vector<std::string> atom_names;
  if (!manifest_file.empty())
    for (const auto& e : dnf::PredicateManifest::load(manifest_file).entries)
      atom_names.push_back(e.predicate_id + "/" + e.atom_id);

  auto name_of = [&](int atom) {
    if (atom < static_cast<int>(atom_names.size())) return atom_names[atom];
    return "a" + std::to_string(atom);
  };

  auto rules = dnf::extract_rules(model);
  json arr = json::array();
  std::string human;
  for (const auto& rule : rules) {
    json clauses = json::array();
    std::string line = "label " + std::to_string(rule.label) + ": ";
    for (std::size_t c = 0; c < rule.clauses.size(); ++c) {
      json lits = json::array();
      std::string conj;
      for (const auto& lit : rule.clauses[c]) {
        lits.push_back({{"atom", lit.atom}, {"negated", lit.negated}});
        conj += (conj.empty() ? "" : " & ") + std::string(lit.negated ? "!" : "") +
                name_of(lit.atom);
      }
      clauses.push_back(lits);
      line += (c ? " | (" : "(") + (conj.empty() ? "true" : conj) + ")";
    }
    arr.push_back({{"label", rule.label}, {"clauses", clauses}});
    human += line + "\n";
  }
  if (human.empty()) human = "(no rules above threshold)\n";
  print_doc(state, arr, human);
  return kExitOk;
}

// --- creagentive ---------------------------------------------------------------

int cmd_creagentive_run(crea::RunConfig config, const std::string& templates_dir,
                        const std::string& resources_file, const std::string& store_root,
                        const CommonState& state) {
  auto catalog = load_catalog(templates_dir);

  std::unique_ptr<op::VersionStore> store;
  if (!store_root.empty())
    store = std::make_unique<op::FileVersionStore>(store_root);
  else
    store = std::make_unique<op::InMemoryVersionStore>();

  op::MemoryStore memory;
  agents::Registry registry;
  res::ResourceManager resources;
  if (!resources_file.empty()) resources.load_catalog(resources_file);
  if (!resources.descriptor(config.backend))
    crea::register_project_backend(resources, config);

  crea::Services services;
  services.version_store = store.get();
  services.memory_store = &memory;
  services.registry = &registry;
  services.resources = &resources;
  services.catalog = &catalog;

  auto result = crea::run(config, services);

  json doc{{"chapters", result.chapters.size()},
           {"final_version", result.final_version.str()},
           {"truncated", result.truncated},
           {"novel", (config.out_dir / "novel.md").string()},
           {"events", result.event_log_path.string()}};
  std::string human = "wrote " + std::to_string(result.chapters.size()) + " chapters (head " +
                      result.final_version.str() + (result.truncated ? ", truncated" : "") +
                      ") to " + config.out_dir.string() + "\n";
  print_doc(state, doc, human);
  return kExitOk;
}

// --- versions -------------------------------------------------------------------

int cmd_versions(const std::string& key, const std::string& root, const CommonState& state) {
  op::FileVersionStore store(root);
  auto chain = store.chain(key);
  json arr = json::array();
  std::string human;
  for (const auto& e : chain) {
    arr.push_back({{"version", e.version.str()},
                   {"ts", e.ts_ms},
                   {"sha256", e.sha256},
                   {"parent", e.parent ? json(e.parent->str()) : json()}});
    human += e.version.str() + "  " + std::to_string(e.ts_ms) + "  " + e.sha256 + "\n";
  }
  print_doc(state, arr, human);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical agent workflow framework"};
  app.require_subcommand(1);
  CommonState state;

  // run
  auto* run_cmd = app.add_subcommand("run", "execute a workflow spec");
  std::string run_spec, run_resources = env_or("HAWK_RESOURCES", ""), run_registry,
              run_store = env_or("HAWK_STORE", ""), run_events;
  std::uint64_t run_seed = 0;
  int run_parallelism = 0;
  run_cmd->add_option("--spec", run_spec, "workflow spec file")->required();
  run_cmd->add_option("--seed", run_seed, "rng seed");
  run_cmd->add_option("--parallelism", run_parallelism, "max nodes in flight");
  run_cmd->add_option("--resources", run_resources, "resource catalog file");
  run_cmd->add_option("--registry", run_registry, "agent registry file");
  run_cmd->add_option("--store", run_store, "version store root");
  run_cmd->add_option("--events", run_events, "write the event log (ndjson)");
  run_cmd->add_flag("--json", state.json_output, "machine-readable output");

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "print the stage decomposition");
  std::string plan_spec;
  plan_cmd->add_option("--spec", plan_spec, "workflow spec file")->required();
  plan_cmd->add_flag("--json", state.json_output, "machine-readable output");

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "check a workflow spec");
  std::string validate_spec;
  validate_cmd->add_option("--spec", validate_spec, "workflow spec file")->required();
  validate_cmd->add_flag("--json", state.json_output, "machine-readable output");

  // agents
  auto* agents_cmd = app.add_subcommand("agents", "registry administration");
  std::string agents_registry = "registry.json";
  agents_cmd->add_option("--registry", agents_registry, "registry file");
  auto* agents_list = agents_cmd->add_subcommand("list", "list descriptors");
  agents_list->add_flag("--json", state.json_output, "machine-readable output");
  auto* agents_publish = agents_cmd->add_subcommand("publish", "publish a spec");
  std::string publish_file;
  agents_publish->add_option("spec", publish_file, "agent spec json")->required();
  auto* agents_register = agents_cmd->add_subcommand("register", "register an endpoint");
  std::string register_id, register_endpoint;
  agents_register->add_option("id", register_id)->required();
  agents_register->add_option("endpoint", register_endpoint)->required();
  auto* agents_retire = agents_cmd->add_subcommand("retire", "retire an agent");
  std::string retire_id;
  agents_retire->add_option("id", retire_id)->required();
  agents_cmd->require_subcommand(1);

  // dnf
  auto* dnf_cmd = app.add_subcommand("dnf", "decision layer training and inspection");
  auto* dnf_train = dnf_cmd->add_subcommand("train", "train a model");
  std::string train_data, train_out = "model.json";
  int train_clauses = 4, train_epochs = 2000;
  double train_lr = 0.05, train_l1 = 0.0;
  std::uint64_t train_seed = 7;
  dnf_train->add_option("--data", train_data, "training data json")->required();
  dnf_train->add_option("--clauses", train_clauses, "conjunction count");
  dnf_train->add_option("--lr", train_lr, "learning rate");
  dnf_train->add_option("--epochs", train_epochs, "epochs");
  dnf_train->add_option("--seed", train_seed, "init seed");
  dnf_train->add_option("--l1", train_l1, "gate penalty");
  dnf_train->add_option("--out", train_out, "model output file");
  dnf_train->add_flag("--json", state.json_output, "machine-readable output");
  auto* dnf_eval = dnf_cmd->add_subcommand("eval", "evaluate a model");
  std::string eval_model, eval_data;
  dnf_eval->add_option("--model", eval_model)->required();
  dnf_eval->add_option("--data", eval_data)->required();
  dnf_eval->add_flag("--json", state.json_output, "machine-readable output");
  auto* dnf_rules = dnf_cmd->add_subcommand("rules", "print extracted rules");
  std::string rules_model, rules_manifest;
  dnf_rules->add_option("--model", rules_model)->required();
  dnf_rules->add_option("--manifest", rules_manifest, "predicate manifest for atom names");
  dnf_rules->add_flag("--json", state.json_output, "machine-readable output");
  dnf_cmd->require_subcommand(1);

  // creagentive
  auto* crea_cmd = app.add_subcommand("creagentive", "story generation demo");
  auto* crea_run = crea_cmd->add_subcommand("run", "run the novel loop");
  crea::RunConfig crea_config;
  std::string crea_project, crea_out, crea_templates,
      crea_resources = env_or("HAWK_RESOURCES", ""), crea_store;
  bool crea_sequential = false;
  crea_run->add_option("--project", crea_project, "project directory")->required();
  crea_run->add_option("--candidates", crea_config.n_candidates, "candidates per chapter");
  crea_run->add_option("--seed", crea_config.seed, "rng seed");
  crea_run->add_option("--max-chapters", crea_config.max_chapters, "hard chapter cap");
  crea_run->add_option("--backend", crea_config.backend, "model resource id");
  crea_run->add_option("--out", crea_out, "output directory (default <project>/out)");
  crea_run->add_option("--templates", crea_templates, "template catalog directory");
  crea_run->add_option("--resources", crea_resources, "resource catalog file");
  crea_run->add_option("--store", crea_store, "file-backed version store root");
  crea_run->add_flag("--keep-losers", crea_config.keep_losers, "persist losing projections");
  crea_run->add_flag("--sequential-candidates", crea_sequential,
                     "generate candidates one at a time");
  crea_run->add_flag("--json", state.json_output, "machine-readable output");
  crea_cmd->require_subcommand(1);

  // versions
  auto* versions_cmd = app.add_subcommand("versions", "inspect a version chain");
  std::string versions_key, versions_root = env_or("HAWK_STORE", "");
  versions_cmd->add_option("key", versions_key, "chain key")->required();
  versions_cmd->add_option("--root", versions_root, "store root");
  versions_cmd->add_flag("--json", state.json_output, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (run_cmd->parsed())
      return cmd_run(run_spec, run_seed, run_parallelism, run_resources, run_registry,
                     run_store, run_events, state);
    if (plan_cmd->parsed()) return cmd_plan(plan_spec, state);
    if (validate_cmd->parsed()) return cmd_validate(validate_spec, state);

    if (agents_cmd->parsed()) {
      agents::Registry registry;
      registry.load_from_file(agents_registry);
      if (agents_list->parsed()) return cmd_agents_list(registry, state);
      if (agents_publish->parsed()) {
        auto spec = agents::AgentSpecification::from_json(
            json::parse(util::read_file(publish_file)));
        auto desc = registry.publish(registry.specify(spec));
        std::cout << "published " << desc.agent_id << "\n";
        return kExitOk;
      }
      if (agents_register->parsed()) {
        auto desc = registry.register_endpoint(register_id, register_endpoint);
        std::cout << "registered " << desc.agent_id << " at " << desc.endpoint << "\n";
        return kExitOk;
      }
      if (agents_retire->parsed()) {
        registry.retire(retire_id);
        std::cout << "retired " << retire_id << "\n";
        return kExitOk;
      }
    }

    if (dnf_cmd->parsed()) {
      if (dnf_train->parsed())
        return cmd_dnf_train(train_data, train_clauses, train_lr, train_epochs, train_seed,
                             train_l1, train_out, state);
      if (dnf_eval->parsed()) return cmd_dnf_eval(eval_model, eval_data, state);
      if (dnf_rules->parsed()) return cmd_dnf_rules(rules_model, rules_manifest, state);
    }

    if (crea_cmd->parsed() && crea_run->parsed()) {
      crea_config.project_dir = crea_project;
      crea_config.out_dir = crea_out.empty() ? crea_config.project_dir / "out"
                                             : std::filesystem::path(crea_out);
      crea_config.parallel_candidates = !crea_sequential;
      if (crea_store.empty()) crea_store = env_or("HAWK_STORE", "");
      return cmd_creagentive_run(crea_config, crea_templates, crea_resources, crea_store,
                                 state);
    }

    if (versions_cmd->parsed()) {
      if (versions_root.empty())
        throw Error(ErrorCode::usage_error, "--root or HAWK_STORE is required");
      return cmd_versions(versions_key, versions_root, state);
    }
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitDomain;
  }
  return kExitUsage;
}
