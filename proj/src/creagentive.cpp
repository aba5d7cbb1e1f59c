#include "hawk/creagentive.hpp"

#include <algorithm>
#include <sstream>
#include <thread>

#include "hawk/errors.hpp"
#include "hawk/output_validation.hpp"
#include "hawk/reasoning.hpp"
#include "hawk/util.hpp"

namespace hawk::crea {

json Outline::to_json() const {
  json ms = json::array();
  for (const auto& m : milestones)
    ms.push_back({{"milestone_id", m.milestone_id},
                  {"description", m.description},
                  {"completion_predicate", m.completion_predicate}});
  return json{{"title", title}, {"milestones", ms}, {"ending_condition", ending_condition}};
}

Outline Outline::from_json(const json& doc) {
  Outline o;
  o.title = doc.at("title").get<std::string>();
  std::set<std::string> ids;
  for (const auto& jm : doc.at("milestones")) {
    Milestone m;
    m.milestone_id = jm.at("milestone_id").get<std::string>();
    m.description = jm.value("description", std::string{});
    m.completion_predicate = jm.at("completion_predicate").get<std::string>();
    if (m.completion_predicate.rfind("flag:", 0) != 0 &&
        m.completion_predicate.rfind("llm:", 0) != 0)
      throw Error(ErrorCode::schema_error,
                  "milestone '" + m.milestone_id + "': predicate must start flag: or llm:");
    if (!ids.insert(m.milestone_id).second)
      throw Error(ErrorCode::schema_error, "duplicate milestone id " + m.milestone_id);
    o.milestones.push_back(std::move(m));
  }
  o.ending_condition = doc.value("ending_condition", std::vector<std::string>{});
  for (const auto& id : o.ending_condition)
    if (!ids.count(id))
      throw Error(ErrorCode::schema_error, "ending_condition references unknown '" + id + "'");
  return o;
}

StoryState initialize(const std::filesystem::path& project_dir, op::VersionStore& store,
                      op::MemoryStore& memory) {
  auto require_file = [&](const char* name) {
    auto path = project_dir / name;
    if (!std::filesystem::exists(path))
      throw Error(ErrorCode::missing_file, (project_dir / name).string());
    return path;
  };

  StoryState state;
  try {
    state.outline = Outline::from_json(json::parse(util::read_file(require_file("outline.json"))));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_error, std::string("outline.json: ") + e.what());
  }

  json env;
  try {
    env = json::parse(util::read_file(require_file("environment.json")));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::schema_error, std::string("environment.json: ") + e.what());
  }

  auto characters_dir = project_dir / "characters";
  if (!std::filesystem::is_directory(characters_dir))
    throw Error(ErrorCode::missing_file, characters_dir.string());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(characters_dir))
    if (entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::missing_file, "characters/*.json");

  for (const auto& file : files) {
    json jc;
    try {
      jc = json::parse(util::read_file(file));
    } catch (const json::parse_error& e) {
      throw Error(ErrorCode::schema_error, file.string() + ": " + e.what());
    }
    CharacterProfile c;
    c.character_id = jc.at("character_id").get<std::string>();
    c.name = jc.value("name", c.character_id);
    c.traits = jc.value("traits", std::vector<std::string>{});
    c.initial_state = jc.value("initial_state", json::object());
    c.memories = jc.value("memories", std::vector<std::string>{});
    for (const auto& existing : state.characters)
      if (existing.character_id == c.character_id)
        throw Error(ErrorCode::schema_error, "duplicate character id " + c.character_id);
    state.characters.push_back(std::move(c));
  }

  store.create("world", env.dump(2));
  for (const auto& c : state.characters) {
    store.create("char/" + c.character_id, c.initial_state.dump(2));
    for (const auto& body : c.memories) {
      op::MemoryRecord record;
      record.kind = op::MemoryKind::observation;
      record.body = body;
      record.chapter_version = op::VersionTag{0};
      memory.append(c.character_id, std::move(record));
    }
  }
  return state;
}

std::vector<LongTermGoal> derive_long_term_goals(const Outline& outline) {
  std::vector<LongTermGoal> goals;
  goals.reserve(outline.milestones.size());
  for (const auto& m : outline.milestones) goals.push_back({m.milestone_id, m.description});
  return goals;
}

bool parse_goal_answer(const std::string& answer, std::string& goal_text,
                       std::vector<std::string>& steps) {
  goal_text.clear();
  steps.clear();
  auto goal_pos = answer.find("GOAL:");
  auto plan_pos = answer.find("| PLAN:");
  if (goal_pos == std::string::npos || plan_pos == std::string::npos || plan_pos < goal_pos)
    return false;
  goal_text = util::trim(answer.substr(goal_pos + 5, plan_pos - goal_pos - 5));
  std::string plan = answer.substr(plan_pos + 7);
  for (const auto& part : util::split(plan, ';')) {
    auto step = util::trim(part);
    if (!step.empty()) steps.push_back(step);
  }
  return !goal_text.empty() && !steps.empty();
}

namespace {

std::string render_memories(const op::MemoryStore& memory, const std::string& agent_id) {
  std::string out;
  for (const auto& r : memory.last(agent_id, kMemoryWindow))
    out += "MEMORY[" + to_string(r.kind) + "]: " + r.body + "\n";
  return out;
}

void emit_pair(engine::EventSink* sink, const std::string& node_id, const std::string& tag,
               const std::string& error_class, int attempt) {
  if (!sink) return;
  sink->emit(node_id, engine::EventKind::violation,
             {{"error_class", error_class}, {"tag", tag}});
  sink->emit(node_id, engine::EventKind::retried,
             {{"error_class", error_class},
              {"tag", tag},
              {"attempt", std::to_string(attempt)},
              {"scope", "op"}});
}

}  // namespace

std::pair<ShortTermGoal, ActionPlan> generate_short_term_goal(const CharacterProfile& character,
                                                              const GoalGenContext& ctx,
                                                              std::uint64_t seed) {
  if (!ctx.unmet || ctx.unmet->empty())
    throw Error(ErrorCode::schema_error, "no unmet milestones to derive goals from");

  std::string traits;
  for (const auto& t : character.traits) traits += (traits.empty() ? "" : ", ") + t;
  std::string unmet_lines;
  for (const auto& g : *ctx.unmet)
    unmet_lines += "UNMET: " + g.milestone_id + " - " + g.description + "\n";

  for (int attempt = 0; attempt <= kGoalRetryBudget; ++attempt) {
    std::string tag = "goal:" + character.character_id + ":ch" +
                      std::to_string(ctx.chapter_number) + ctx.tag_suffix +
                      (attempt > 0 ? ":retry" + std::to_string(attempt) : "");
    op::ReasoningInput input;
    input.question = tag + "\n" +
                     "CHAPTER: " + std::to_string(ctx.chapter_number) + "\n" +
                     "CHARACTER: " + character.name + " (" + traits + ")\n" +
                     "ENVIRONMENT: " + ctx.env->dump() + "\n" + render_memories(*ctx.memory, character.character_id) +
                     unmet_lines +
                     "Format the final line as 'ANSWER: GOAL: <goal> | PLAN: <step>; <step>'";

    res::GenerationParams params;
    params.seed = seed;

    std::string failure;
    try {
      auto trace = op::reason(input, *ctx.backend, params, ctx.sink, ctx.node_id);
      std::string goal_text;
      std::vector<std::string> step_texts;
      if (parse_goal_answer(trace.answer, goal_text, step_texts)) {
        ShortTermGoal goal;
        goal.character_id = character.character_id;
        goal.chapter_index = ctx.chapter_number;
        goal.goal_text = goal_text;
        for (const auto& g : *ctx.unmet) goal.derived_from.push_back(g.milestone_id);
        goal.reasoning_trace_ref = tag;

        ActionPlan plan;
        plan.character_id = character.character_id;
        plan.goal_ref = goal_text;
        for (const auto& s : step_texts) plan.steps.push_back({s, affected_entities_of(s)});

        op::MemoryRecord goal_record;
        goal_record.kind = op::MemoryKind::goal;
        goal_record.body = goal_text;
        goal_record.chapter_version = ctx.base_version;
        ctx.memory->append(character.character_id, std::move(goal_record));

        std::string joined;
        for (const auto& s : step_texts) joined += (joined.empty() ? "" : "; ") + s;
        op::MemoryRecord plan_record;
        plan_record.kind = op::MemoryKind::plan;
        plan_record.body = joined;
        plan_record.chapter_version = ctx.base_version;
        ctx.memory->append(character.character_id, std::move(plan_record));

        return {std::move(goal), std::move(plan)};
      }
      failure = "goal_grammar";
    } catch (const Error& e) {
      if (e.code() != ErrorCode::unparseable_trace) throw;
      failure = "unparseable_trace";
    }
    if (attempt == kGoalRetryBudget)
      throw Error(ErrorCode::goal_generation_failed,
                  character.character_id + " after " + std::to_string(attempt + 1) + " attempts");
    emit_pair(ctx.sink, ctx.node_id, tag, failure, attempt + 1);
  }
  throw Error(ErrorCode::goal_generation_failed, character.character_id);
}

std::vector<std::string> affected_entities_of(const std::string& step_text) {
  std::string text = util::trim(step_text);
  if (text.rfind("flag ", 0) == 0) return {"flags/" + util::trim(text.substr(5))};
  if (text.rfind("set ", 0) == 0) {
    auto rest = util::trim(text.substr(4));
    auto dot = rest.find('.');
    auto space = rest.find(' ');
    if (dot != std::string::npos && (space == std::string::npos || dot < space))
      return {rest.substr(0, dot)};
  }
  return {};
}

json apply_plan_effects(json env, const std::vector<ActionPlan>& plans) {
  if (!env.is_object()) env = json::object();
  if (!env.contains("flags") || !env["flags"].is_array()) env["flags"] = json::array();
  if (!env.contains("entities") || !env["entities"].is_object())
    env["entities"] = json::object();
  if (!env.contains("effects") || !env["effects"].is_array()) env["effects"] = json::array();

  for (const auto& plan : plans) {
    for (const auto& step : plan.steps) {
      std::string text = util::trim(step.step_text);
      if (text.rfind("flag ", 0) == 0) {
        std::string name = util::trim(text.substr(5));
        bool present = false;
        for (const auto& f : env["flags"])
          if (f.is_string() && f.get<std::string>() == name) present = true;
        if (!present) env["flags"].push_back(name);
      } else if (text.rfind("set ", 0) == 0) {
        std::string rest = util::trim(text.substr(4));
        auto space = rest.find(' ');
        if (space != std::string::npos) {
          std::string path = rest.substr(0, space);
          std::string value = util::trim(rest.substr(space + 1));
          auto dot = path.find('.');
          if (dot != std::string::npos) {
            std::string entity = path.substr(0, dot);
            std::string field = path.substr(dot + 1);
            env["entities"][entity][field] = value;  // later plans win conflicts
          }
        }
      }
      env["effects"].push_back({{"by", plan.character_id}, {"text", text}});
    }
  }
  return env;
}

double evaluate_truth(const std::string& question, res::ResourceHandle& backend,
                      std::uint64_t seed, engine::EventSink* sink,
                      const std::string& node_id, const AskOptions& options) {
  std::string tag = question.substr(0, question.find('\n'));
  std::uint64_t attempt_seed = seed;
  for (int attempt = 0; attempt < options.max_attempts; ++attempt) {
    res::GenerationParams params;
    params.n_samples = options.n_samples;
    params.seed = attempt_seed;
    int unparseable = 0;
    try {
      auto evidence = backend.ask_yes_no(question, params);
      if (std::holds_alternative<res::LogitEvidence>(evidence)) {
        const auto& le = std::get<res::LogitEvidence>(evidence);
        return dnf::truth_from_logits(le.v_yes, le.v_no);
      }
      const auto& se = std::get<res::SampleEvidence>(evidence);
      if (se.unparseable == 0) return dnf::truth_from_samples(se.m_yes, se.m_no);
      unparseable = se.unparseable;
    } catch (const Error& e) {
      if (e.code() != ErrorCode::no_parseable_answers) throw;
      unparseable = options.n_samples;
    }
    for (int i = 0; i < unparseable; ++i)
      emit_pair(sink, node_id, tag, "malformed_output", attempt + 1);
    attempt_seed += 1000;  // draw a fresh sample batch
  }
  throw Error(ErrorCode::no_parseable_answers, "retry budget exhausted for " + tag);
}

std::vector<Trajectory> generate_candidates(const CandidateContext& ctx) {
  if (ctx.n_candidates < 1)
    throw Error(ErrorCode::no_candidates, "n_candidates must be >= 1");

  std::vector<std::optional<Trajectory>> slots(static_cast<std::size_t>(ctx.n_candidates));
  std::vector<std::string> failures(static_cast<std::size_t>(ctx.n_candidates));

  auto build = [&](int j) {
    try {
      op::MemoryStore scratch(*ctx.memory);  // private view; winner merges later
      Trajectory t;
      t.trajectory_id =
          "ch" + std::to_string(ctx.chapter_number) + "-c" + std::to_string(j);
      t.base_env_version = ctx.base_version;
      std::uint64_t candidate_seed = ctx.seed + static_cast<std::uint64_t>(j);

      for (const auto& character : ctx.state->characters) {
        GoalGenContext g;
        g.env = &ctx.base_env;
        g.unmet = &ctx.unmet;
        g.backend = ctx.backend;
        g.memory = &scratch;
        g.sink = ctx.sink;
        g.node_id = ctx.node_id;
        g.chapter_number = ctx.chapter_number;
        g.tag_suffix = ":c" + std::to_string(j);
        g.base_version = ctx.base_version;
        auto [goal, plan] = generate_short_term_goal(character, g, candidate_seed);
        t.goals.push_back(std::move(goal));
        t.plans.push_back(std::move(plan));
      }

      for (const auto& character : ctx.state->characters) {
        op::MemoryFilter newer;
        newer.since_seq = ctx.memory->tail_seq(character.character_id);
        for (auto& r : scratch.query(character.character_id, newer))
          t.pending_memories.push_back(std::move(r));
      }

      t.projected_env = apply_plan_effects(ctx.base_env, t.plans);

      t.atom_values.resize(ctx.manifest.atom_count());
      std::string digest = t.projected_env.dump();
      for (std::size_t i = 0; i < ctx.manifest.entries.size(); ++i) {
        const auto& entry = ctx.manifest.entries[i];
        std::string question = "ask:" + entry.predicate_id + ":ch" +
                               std::to_string(ctx.chapter_number) + ":c" + std::to_string(j) +
                               "\n" + entry.question_template + "\nENV: " + digest;
        t.atom_values(static_cast<Eigen::Index>(i)) = evaluate_truth(
            question, *ctx.backend, candidate_seed, ctx.sink, ctx.node_id);
      }
      slots[static_cast<std::size_t>(j)] = std::move(t);
    } catch (const std::exception& e) {
      failures[static_cast<std::size_t>(j)] = e.what();
    }
  };

  if (ctx.parallel && ctx.n_candidates > 1) {
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(ctx.n_candidates));
    for (int j = 0; j < ctx.n_candidates; ++j) workers.emplace_back(build, j);
    for (auto& w : workers) w.join();
  } else {
    for (int j = 0; j < ctx.n_candidates; ++j) build(j);
  }

  std::vector<Trajectory> out;
  for (auto& slot : slots)
    if (slot) out.push_back(std::move(*slot));
  if (out.empty()) {
    std::string detail;
    for (const auto& f : failures)
      if (!f.empty()) detail += (detail.empty() ? "" : "; ") + f;
    throw Error(ErrorCode::no_viable_candidates, detail);
  }
  return out;
}

Chapter write_chapter(const Trajectory& trajectory, const WriteContext& ctx) {
  op::OutputSchema schema;
  schema.name = "chapter";
  schema.required_fields = {{"chapter_text", "string", true, {}},
                            {"characters", "array", false, {}}};
  schema.semantic_rules.emplace_back(
      "unknown_character",
      op::name_set_membership_rule("characters", "present_characters", "unknown_character"));

  json validation_env = trajectory.projected_env;
  json names = json::array();
  for (const auto& c : ctx.state->characters) names.push_back(c.name);
  validation_env["present_characters"] = names;

  std::string body;
  body += "TITLE: " + ctx.state->outline.title + "\n";
  for (std::size_t i = 0; i < trajectory.plans.size(); ++i) {
    const auto& plan = trajectory.plans[i];
    body += "PLAN " + plan.character_id + ": " + plan.goal_ref + " -> ";
    for (std::size_t s = 0; s < plan.steps.size(); ++s)
      body += (s ? "; " : "") + plan.steps[s].step_text;
    body += "\n";
  }
  body += "ENV: " + trajectory.projected_env.dump() + "\n";
  body += "Write the chapter as JSON: {\"chapter_text\": \"...\", \"characters\": [\"...\"]}";

  std::vector<op::OutputViolation> last_violations;
  for (int attempt = 0; attempt <= kChapterRetryBudget; ++attempt) {
    std::string tag = "write:ch" + std::to_string(ctx.chapter_number) +
                      (attempt > 0 ? ":retry" + std::to_string(attempt) : "");
    std::string prompt = tag + "\n";
    if (!last_violations.empty()) {
      prompt += "VIOLATIONS:";
      for (const auto& v : last_violations) prompt += " [" + v.rule + "] " + v.message + ";";
      prompt += "\n";
    }
    prompt += body;

    res::GenerationParams params;
    params.seed = ctx.seed;
    auto result = ctx.backend->generate(prompt, params);
    const std::string& text = std::get<res::Completion>(result).text;

    json payload;
    bool parsed = true;
    try {
      payload = json::parse(text);
    } catch (const json::parse_error& e) {
      parsed = false;
      last_violations = {{"malformed_output", e.what()}};
    }
    if (parsed) last_violations = op::validate_output(schema, payload, validation_env);

    if (last_violations.empty()) {
      if (ctx.sink)
        ctx.sink->emit(ctx.node_id, engine::EventKind::validated, {{"tag", tag}});
      Chapter chapter;
      chapter.chapter_index = ctx.chapter_number;
      chapter.trajectory_ref = trajectory.trajectory_id;
      chapter.text = payload.at("chapter_text").get<std::string>();
      std::istringstream in(chapter.text);
      std::string token;
      while (in >> token) chapter.word_count += 1;
      return chapter;
    }

    std::string joined;
    for (const auto& v : last_violations) joined += (joined.empty() ? "" : "; ") + v.rule;
    if (ctx.sink)
      ctx.sink->emit(ctx.node_id, engine::EventKind::violation,
                     {{"error_class", "chapter_violation"},
                      {"tag", tag},
                      {"violations", joined}});
    if (attempt < kChapterRetryBudget && ctx.sink)
      ctx.sink->emit(ctx.node_id, engine::EventKind::retried,
                     {{"error_class", "chapter_violation"},
                      {"tag", tag},
                      {"attempt", std::to_string(attempt + 1)},
                      {"scope", "op"}});
  }
  throw Error(ErrorCode::chapter_rejected,
              "violations persist after " + std::to_string(kChapterRetryBudget) + " retries");
}

void commit_state(StoryState& state, Chapter& chapter, const Trajectory& winner,
                  op::VersionStore& store, op::MemoryStore& memory) {
  auto new_tag = store.commit("world", winner.projected_env.dump(2), winner.base_env_version);

  for (const auto& record : winner.pending_memories) {
    op::MemoryRecord copy = record;  // store reassigns seq
    memory.append(record.agent_id, std::move(copy));
  }

  for (std::size_t i = 0; i < winner.plans.size(); ++i) {
    const auto& plan = winner.plans[i];
    op::MemoryRecord outcome;
    outcome.kind = op::MemoryKind::outcome;
    outcome.body = "chapter " + std::to_string(chapter.chapter_index) + ": " + plan.goal_ref;
    outcome.chapter_version = new_tag;
    memory.append(plan.character_id, std::move(outcome));

    // Per-character audit chain advances in step with the world chain.
    json snapshot = json::array();
    op::MemoryFilter tail;
    tail.chapter_version = new_tag;
    for (const auto& r : memory.query(plan.character_id, tail))
      snapshot.push_back({{"seq", r.seq}, {"kind", to_string(r.kind)}, {"body", r.body}});
    store.commit("char/" + plan.character_id, snapshot.dump(2),
                 op::VersionTag{new_tag.n - 1});
  }

  chapter.env_version_after = new_tag;
  state.chapter_index += 1;
}

EndingCheck check_ending(StoryState& state, const json& env, res::ResourceHandle* backend,
                         std::uint64_t seed, int chapter_number, engine::EventSink* sink,
                         const std::string& node_id) {
  for (const auto& milestone : state.outline.milestones) {
    if (state.satisfied_milestones.count(milestone.milestone_id)) continue;
    bool satisfied = false;
    const auto& pred = milestone.completion_predicate;
    if (pred.rfind("flag:", 0) == 0) {
      std::string name = pred.substr(5);
      if (env.contains("flags") && env.at("flags").is_array())
        for (const auto& f : env.at("flags"))
          if (f.is_string() && f.get<std::string>() == name) satisfied = true;
    } else if (pred.rfind("llm:", 0) == 0) {
      if (!backend)
        throw Error(ErrorCode::no_provider, "llm predicate needs a backend: " + pred);
      std::string question = "end:" + milestone.milestone_id + ":ch" +
                             std::to_string(chapter_number) + "\n" + pred.substr(4) +
                             "\nENV: " + env.dump();
      double mu = evaluate_truth(question, *backend, seed, sink, node_id);
      satisfied = mu > 0.0;  // mu == 0 is not satisfied
    } else {
      throw Error(ErrorCode::schema_error, "unknown predicate form: " + pred);
    }
    if (satisfied) state.satisfied_milestones.insert(milestone.milestone_id);
  }

  EndingCheck check;
  check.satisfied = state.satisfied_milestones;
  check.done = true;
  for (const auto& id : state.outline.ending_condition)
    if (!state.satisfied_milestones.count(id)) check.done = false;
  return check;
}

// --- full run ----------------------------------------------------------------------

namespace {

struct IterationState {
  json env;
  op::VersionTag base_version;
  std::vector<LongTermGoal> unmet;
  std::vector<Trajectory> candidates;
  int winner = 0;
  std::optional<Chapter> chapter;
  bool done = false;
};

struct RunContext {
  const RunConfig* config = nullptr;
  Services* services = nullptr;
  StoryState* state = nullptr;
  IterationState* iter = nullptr;
  std::shared_ptr<res::ResourceHandle> backend;
  dnf::PredicateManifest manifest;
  std::optional<dnf::DnfModel> model;
  engine::EventSink* sink = nullptr;
  std::string node_id;
};

class StoryDispatcher : public engine::OperatorDispatcher {
 public:
  explicit StoryDispatcher(RunContext& rc) : rc_(rc) {}

  bool resolves(model::OperatorKind) const override { return true; }

  engine::TaskResult run(const model::TaskNode& node, engine::EventSink& sink) override {
    rc_.sink = &sink;
    rc_.node_id = node.node_id;
    std::string step = node.params.value("step", "");
    auto& iter = *rc_.iter;
    auto& state = *rc_.state;
    auto& services = *rc_.services;

    engine::TaskResult result;
    result.ok = true;

    if (step == "load-env") {
      auto doc = services.version_store->get("world");
      iter.env = json::parse(doc.body);
      iter.base_version = doc.version;
      result.output = {{"version", doc.version.str()}};
      return result;
    }
    if (step == "gen-goals") {
      iter.unmet.clear();
      for (const auto& goal : derive_long_term_goals(state.outline))
        if (!state.satisfied_milestones.count(goal.milestone_id)) iter.unmet.push_back(goal);
      result.output = {{"unmet", iter.unmet.size()}};
      return result;
    }
    if (step == "gen-candidates") {
      CandidateContext cc;
      cc.state = &state;
      cc.base_env = iter.env;
      cc.base_version = iter.base_version;
      cc.unmet = iter.unmet;
      cc.manifest = rc_.manifest;
      cc.backend = rc_.backend.get();
      cc.memory = services.memory_store;
      cc.sink = &sink;
      cc.node_id = node.node_id;
      cc.chapter_number = state.chapter_index + 1;
      cc.seed = rc_.config->seed;
      cc.n_candidates = rc_.config->n_candidates;
      cc.parallel = rc_.config->parallel_candidates;
      iter.candidates = generate_candidates(cc);
      result.output = {{"candidates", iter.candidates.size()}};
      return result;
    }
    if (step == "commit") {
      if (!iter.chapter) throw Error(ErrorCode::schema_error, "commit before write");
      commit_state(state, *iter.chapter, iter.candidates[static_cast<std::size_t>(iter.winner)],
                   *services.version_store, *services.memory_store);
      result.output = {{"version", iter.chapter->env_version_after.str()}};
      return result;
    }

    // decide / write / ending-check go through the registry dispatch path.
    model::TaskNode invocation = node;
    if (step == "decide") {
      json atoms = json::array();
      for (const auto& t : iter.candidates) {
        json row = json::array();
        for (Eigen::Index i = 0; i < t.atom_values.size(); ++i) row.push_back(t.atom_values(i));
        atoms.push_back(row);
      }
      invocation.params["payload"] = {{"atoms", atoms}};
    } else {
      invocation.params["payload"] = json::object();
    }

    op::ExecutionContext ctx;
    ctx.principal = "story";
    ctx.capabilities = op::open_capabilities();
    ctx.version_store = services.version_store;
    ctx.memory_store = services.memory_store;
    ctx.registry = services.registry;
    ctx.resources = services.resources;
    ctx.sink = &sink;
    ctx.node_id = node.node_id;
    auto dispatched = op::dispatch(invocation, ctx);

    if (step == "decide") {
      iter.winner = dispatched.output.value("winner", 0);
    } else if (step == "ending-check") {
      iter.done = dispatched.output.value("done", false);
    }
    return dispatched;
  }

 private:
  RunContext& rc_;
};

ErrorCode error_code_from_message(const std::string& message) {
  static const std::pair<const char*, ErrorCode> table[] = {
      {"ChapterRejected", ErrorCode::chapter_rejected},
      {"NoViableCandidates", ErrorCode::no_viable_candidates},
      {"GoalGenerationFailed", ErrorCode::goal_generation_failed},
      {"StaleParent", ErrorCode::stale_parent},
      {"NoParseableAnswers", ErrorCode::no_parseable_answers},
      {"NoAgentFound", ErrorCode::no_agent_found},
  };
  for (const auto& [prefix, code] : table)
    if (message.rfind(prefix, 0) == 0) return code;
  return ErrorCode::backend_error;
}

void ensure_agent(agents::Registry& registry, const std::string& name,
                  const std::set<std::string>& capabilities,
                  agents::Registry::Callable callable) {
  const std::string version = "1.0.0";
  const std::string agent_id = name + "@" + version;
  registry.bind_callable(name, std::move(callable));
  if (auto existing = registry.find(agent_id)) {
    if (existing->status == agents::AgentStatus::registered) return;  // re-run: rebound only
    if (existing->status == agents::AgentStatus::published) {
      registry.register_endpoint(agent_id, "callable:" + name);
      return;
    }
    throw Error(ErrorCode::invalid_spec, agent_id + " is retired");
  }
  agents::AgentSpecification spec;
  spec.name = name;
  spec.version = version;
  spec.capabilities = capabilities;
  spec.input_schema = "json";
  spec.output_schema = "json";
  auto canonical = registry.specify(spec);
  registry.publish(canonical);
  registry.register_endpoint(agent_id, "callable:" + name);
}

}  // namespace

Services DefaultServices::view() {
  Services s;
  s.version_store = &version_store;
  s.memory_store = &memory_store;
  s.registry = &registry;
  s.resources = &resources;
  s.catalog = &catalog;
  return s;
}

void register_project_backend(res::ResourceManager& resources, const RunConfig& config) {
  res::ResourceDescriptor desc;
  desc.resource_id = config.backend;
  desc.kind = res::ResourceKind::model;
  desc.uri = "mock://" + (config.project_dir / "fixtures" / "backend.json").string();
  desc.limits.max_concurrent = 8;
  resources.add(desc);
}

std::unique_ptr<DefaultServices> make_default_services(const RunConfig& config) {
  auto services = std::make_unique<DefaultServices>();
  services->catalog = model::TemplateCatalog::builtin();
  register_project_backend(services->resources, config);
  return services;
}

NovelResult run(const RunConfig& config, Services& services) {
  if (!services.version_store || !services.memory_store || !services.registry ||
      !services.resources || !services.catalog)
    throw Error(ErrorCode::schema_error, "incomplete services");

  StoryState state = initialize(config.project_dir, *services.version_store,
                                *services.memory_store);

  RunContext rc;
  rc.config = &config;
  rc.services = &services;
  rc.state = &state;
  rc.backend = services.resources->resolve(config.backend);

  auto manifest_path = config.project_dir / "predicates.json";
  if (std::filesystem::exists(manifest_path))
    rc.manifest = dnf::PredicateManifest::load(manifest_path);
  auto model_path = config.project_dir / "model.json";
  if (std::filesystem::exists(model_path)) {
    rc.model = dnf::DnfModel::load(model_path);
    if (rc.model->n_atoms() != rc.manifest.atom_count())
      throw Error(ErrorCode::dimension_mismatch,
                  "model atoms != predicate manifest entries");
  }

  std::ostringstream scope_stream;
  scope_stream << std::hex
               << util::fnv1a64(config.project_dir.string() + ":" + std::to_string(config.seed));
  const std::string scope = scope_stream.str();
  const std::string story_cap = "story:" + scope;

  ensure_agent(*services.registry, "decision-" + scope, {"select-trajectory", story_cap},
               [&rc](const json& args) -> json {
                 auto rows = args.at("atoms");
                 if (rows.empty()) throw Error(ErrorCode::no_candidates, "empty atom list");
                 if (!rc.model || rc.manifest.atom_count() == 0) {
                   // No decision model: first candidate wins deterministically.
                   return json{{"winner", 0}, {"z", json::array()}};
                 }
                 std::vector<Eigen::VectorXd> candidates;
                 for (const auto& row : rows) {
                   Eigen::VectorXd v(static_cast<Eigen::Index>(row.size()));
                   for (std::size_t i = 0; i < row.size(); ++i)
                     v(static_cast<Eigen::Index>(i)) = row[i].get<double>();
                   candidates.push_back(std::move(v));
                 }
                 auto selection = dnf::select_trajectory(*rc.model, candidates);
                 json z = json::array();
                 for (const auto& zv : selection.z) {
                   json row = json::array();
                   for (Eigen::Index i = 0; i < zv.size(); ++i) row.push_back(zv(i));
                   z.push_back(row);
                 }
                 return json{{"winner", selection.winner}, {"z", z}};
               });

  ensure_agent(*services.registry, "writer-" + scope, {"write-chapter", story_cap},
               [&rc](const json&) -> json {
                 auto& iter = *rc.iter;
                 WriteContext wc;
                 wc.state = rc.state;
                 wc.backend = rc.backend.get();
                 wc.sink = rc.sink;
                 wc.node_id = rc.node_id;
                 wc.chapter_number = rc.state->chapter_index + 1;
                 wc.seed = rc.config->seed;
                 iter.chapter =
                     write_chapter(iter.candidates[static_cast<std::size_t>(iter.winner)], wc);
                 return json{{"chapter_index", iter.chapter->chapter_index},
                             {"word_count", iter.chapter->word_count}};
               });

  ensure_agent(*services.registry, "ending-" + scope, {"check-ending", story_cap},
               [&rc, &services](const json&) -> json {
                 auto head = services.version_store->get("world");
                 json env = json::parse(head.body);
                 auto check = check_ending(*rc.state, env, rc.backend.get(), rc.config->seed,
                                           rc.state->chapter_index, rc.sink, rc.node_id);
                 json satisfied = json::array();
                 for (const auto& id : check.satisfied) satisfied.push_back(id);
                 return json{{"done", check.done}, {"satisfied", satisfied}};
               });

  model::TaskSpec spec_req;
  spec_req.kind = "novel-generation";
  spec_req.task_id = "novel-" + scope;
  spec_req.parameters = {{"project_dir", config.project_dir.string()},
                         {"outline_path", (config.project_dir / "outline.json").string()},
                         {"backend", config.backend},
                         {"n_candidates", config.n_candidates},
                         {"max_chapters", config.max_chapters},
                         {"seed", config.seed},
                         {"run_scope", scope}};
  auto workflow = model::instantiate_workflow(spec_req, *services.catalog);
  // Scope the agent queries of this run's task-management nodes.
  for (auto& node : workflow.nodes)
    if (node.params.contains("capability")) node.params["capabilities"] = {story_cap};

  NovelResult result;
  engine::SystemClock clock;
  std::int64_t next_seq = 1;

  while (true) {
    auto head = services.version_store->get("world");
    json env = json::parse(head.body);
    auto ending = check_ending(state, env, rc.backend.get(), config.seed, state.chapter_index);
    if (ending.done) break;
    if (state.chapter_index >= config.max_chapters) {
      result.truncated = true;
      break;
    }

    IterationState iter;
    rc.iter = &iter;
    int chapter_number = state.chapter_index + 1;

    auto instance = engine::make_instance(
        workflow, {1, 0, 1.0, workflow.concurrency_cap},
        "story-" + scope + "-ch" + std::to_string(chapter_number));
    StoryDispatcher dispatcher(rc);
    auto outcome = engine::execute(instance, dispatcher, clock,
                                   config.seed + static_cast<std::uint64_t>(chapter_number));

    for (auto ev : instance.event_log) {
      ev.payload["iteration"] = std::to_string(chapter_number);
      ev.seq = next_seq++;
      result.events.push_back(std::move(ev));
    }

    if (!outcome.all_succeeded) {
      const auto& [node_id, message] = *outcome.node_failures.begin();
      throw Error(error_code_from_message(message), "node '" + node_id + "': " + message);
    }
    if (!iter.chapter) throw Error(ErrorCode::schema_error, "iteration produced no chapter");

    IterationSummary summary;
    summary.chapter_number = chapter_number;
    summary.winner = iter.winner;
    for (const auto& t : iter.candidates)
      summary.projection_sha256.push_back(util::sha256_hex(t.projected_env.dump(2)));
    summary.committed_sha256 =
        util::sha256_hex(services.version_store->get("world").body);
    result.iterations.push_back(summary);

    if (config.keep_losers) {
      for (std::size_t j = 0; j < iter.candidates.size(); ++j) {
        if (static_cast<int>(j) == iter.winner) continue;
        util::write_file(config.out_dir / "losers" /
                             (iter.candidates[j].trajectory_id + ".json"),
                         iter.candidates[j].projected_env.dump(2));
      }
    }

    result.chapters.push_back(*iter.chapter);
    rc.iter = nullptr;
  }

  result.final_version = services.version_store->head("world");

  std::string novel = "# " + state.outline.title + "\n";
  for (const auto& chapter : result.chapters) {
    std::string text = "# Chapter " + std::to_string(chapter.chapter_index) + "\n\n" +
                       chapter.text + "\n";
    util::write_file(config.out_dir / "chapters" /
                         ("ch" + std::to_string(chapter.chapter_index) + ".md"),
                     text);
    novel += "\n## Chapter " + std::to_string(chapter.chapter_index) + "\n\n" + chapter.text +
             "\n";
  }
  util::write_file(config.out_dir / "novel.md", novel);

  result.event_log_path = config.out_dir / "run.events.ndjson";
  util::write_file(result.event_log_path, engine::to_ndjson(result.events));
  return result;
}

}  // namespace hawk::crea
