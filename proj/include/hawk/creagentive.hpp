#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "hawk/dispatch.hpp"
#include "hawk/dnf.hpp"
#include "hawk/engine.hpp"
#include "hawk/memory_store.hpp"
#include "hawk/model.hpp"
#include "hawk/registry.hpp"
#include "hawk/resource.hpp"
#include "hawk/version_store.hpp"

namespace hawk::crea {

using json = nlohmann::json;

struct Milestone {
  std::string milestone_id;
  std::string description;
  // "flag:<name>" checks the environment flag list directly;
  // "llm:<question>" asks the backend and requires mu > 0 strictly.
  std::string completion_predicate;
};

struct Outline {
  std::string title;
  std::vector<Milestone> milestones;
  std::vector<std::string> ending_condition;  // subset of milestone ids

  json to_json() const;
  static Outline from_json(const json& doc);
};

struct CharacterProfile {
  std::string character_id;
  std::string name;
  std::vector<std::string> traits;
  json initial_state = json::object();
  std::vector<std::string> memories;  // optional archive, loaded at init
};

struct LongTermGoal {
  std::string milestone_id;
  std::string description;
};

struct ShortTermGoal {
  std::string character_id;
  int chapter_index = 0;
  std::string goal_text;
  std::vector<std::string> derived_from;  // non-empty milestone ids
  std::string reasoning_trace_ref;
};

struct PlanStep {
  std::string step_text;
  std::vector<std::string> affected_entities;
};

struct ActionPlan {
  std::string character_id;
  std::vector<PlanStep> steps;  // >= 1
  std::string goal_ref;
};

struct Trajectory {
  std::string trajectory_id;
  op::VersionTag base_env_version;
  std::vector<ActionPlan> plans;  // one per participating character
  json projected_env;
  Eigen::VectorXd atom_values;
  std::vector<ShortTermGoal> goals;
  std::vector<op::MemoryRecord> pending_memories;  // applied only if this wins
};

struct Chapter {
  int chapter_index = 0;  // 1-based
  std::string trajectory_ref;
  std::string text;
  op::VersionTag env_version_after;
  int word_count = 0;
};

struct StoryState {
  Outline outline;
  std::vector<CharacterProfile> characters;
  int chapter_index = 0;  // chapters committed so far
  std::set<std::string> satisfied_milestones;  // sticky across iterations
};

// Reads outline.json, environment.json and characters/*.json, commits the
// world and per-character chains at v0, and loads memory archives.
StoryState initialize(const std::filesystem::path& project_dir, op::VersionStore& store,
                      op::MemoryStore& memory);

// One goal per milestone, order preserved.
std::vector<LongTermGoal> derive_long_term_goals(const Outline& outline);

// "GOAL: <text> | PLAN: <step>; <step>; ..." from a reasoning answer line.
bool parse_goal_answer(const std::string& answer, std::string& goal_text,
                       std::vector<std::string>& steps);

inline constexpr int kMemoryWindow = 10;     // records embedded per prompt
inline constexpr int kGoalRetryBudget = 2;   // reasoning re-invocations
inline constexpr int kChapterRetryBudget = 2;

struct GoalGenContext {
  const json* env = nullptr;
  const std::vector<LongTermGoal>* unmet = nullptr;
  res::ResourceHandle* backend = nullptr;
  op::MemoryStore* memory = nullptr;  // the store goals/plans are appended to
  engine::EventSink* sink = nullptr;
  std::string node_id;
  int chapter_number = 1;       // 1-based
  std::string tag_suffix;       // e.g. ":c0" to scope fixtures per candidate
  op::VersionTag base_version;
};

// CoT-backed short-term goal and plan for one character; appends both to
// the context's memory store.
std::pair<ShortTermGoal, ActionPlan> generate_short_term_goal(const CharacterProfile& character,
                                                              const GoalGenContext& ctx,
                                                              std::uint64_t seed);

// Deterministic textual merge of plan effects onto the base environment.
// Step grammar: "flag <name>" appends to env.flags; "set <entity>.<field>
// <value>" writes entities; every step is appended to env.effects. Later
// plans win conflicting writes.
json apply_plan_effects(json env, const std::vector<ActionPlan>& plans);

std::vector<std::string> affected_entities_of(const std::string& step_text);

struct AskOptions {
  int n_samples = 4;
  int max_attempts = 50;  // re-asks after injected malformed samples
};

// Yes/no evidence for one question, surfacing every unparseable sample as a
// violation + retried pair before re-asking with a bumped seed.
double evaluate_truth(const std::string& question, res::ResourceHandle& backend,
                      std::uint64_t seed, engine::EventSink* sink,
                      const std::string& node_id, const AskOptions& options = {});

struct CandidateContext {
  const StoryState* state = nullptr;
  json base_env;
  op::VersionTag base_version;
  std::vector<LongTermGoal> unmet;
  dnf::PredicateManifest manifest;
  res::ResourceHandle* backend = nullptr;
  const op::MemoryStore* memory = nullptr;  // cloned per candidate
  engine::EventSink* sink = nullptr;
  std::string node_id;
  int chapter_number = 1;
  std::uint64_t seed = 0;
  int n_candidates = 1;
  bool parallel = false;
};

// n candidates from the common base version, each with per-agent goals and
// plans (seeded seed+j), a projected environment, and manifest-evaluated
// atom truths. Failed candidates are dropped; all failing is an error.
std::vector<Trajectory> generate_candidates(const CandidateContext& ctx);

struct WriteContext {
  const StoryState* state = nullptr;
  res::ResourceHandle* backend = nullptr;
  engine::EventSink* sink = nullptr;
  std::string node_id;
  int chapter_number = 1;
  std::uint64_t seed = 0;
};

// Renders the selected trajectory into a chapter; the completion must be a
// JSON document {chapter_text, characters} passing the chapter schema plus
// the unknown-character rule. Violating drafts are retried with the
// violation list appended to the prompt, kChapterRetryBudget times.
Chapter write_chapter(const Trajectory& trajectory, const WriteContext& ctx);

// Commits the winner's projection as the next world version, appends its
// goal/plan records plus an outcome record per character, and advances the
// chapter counter.
void commit_state(StoryState& state, Chapter& chapter, const Trajectory& winner,
                  op::VersionStore& store, op::MemoryStore& memory);

struct EndingCheck {
  bool done = false;
  std::set<std::string> satisfied;
};

// Evaluates every milestone predicate against the environment (sticky:
// once satisfied, always satisfied) and tests the ending condition.
EndingCheck check_ending(StoryState& state, const json& env, res::ResourceHandle* backend,
                         std::uint64_t seed, int chapter_number,
                         engine::EventSink* sink = nullptr, const std::string& node_id = {});

struct Services {
  op::VersionStore* version_store = nullptr;
  op::MemoryStore* memory_store = nullptr;
  agents::Registry* registry = nullptr;
  res::ResourceManager* resources = nullptr;
  const model::TemplateCatalog* catalog = nullptr;
};

struct RunConfig {
  std::filesystem::path project_dir;
  std::filesystem::path out_dir;
  int n_candidates = 3;
  int max_chapters = 50;
  std::uint64_t seed = 0;
  std::string backend = "mock";
  bool keep_losers = false;
  bool parallel_candidates = true;
};

struct IterationSummary {
  int chapter_number = 0;
  int winner = 0;
  std::vector<std::string> projection_sha256;  // per candidate
  std::string committed_sha256;
};

struct NovelResult {
  std::vector<Chapter> chapters;
  op::VersionTag final_version;
  bool truncated = false;
  std::filesystem::path event_log_path;
  std::vector<engine::ExecutionEvent> events;  // merged across iterations
  std::vector<IterationSummary> iterations;
};

// The full loop: initialize, then per chapter run the workflow instance
// built from the novel-generation template (load-env, gen-goals,
// gen-candidates, decide, write, commit, ending-check) until the ending
// condition holds or max_chapters is reached.
NovelResult run(const RunConfig& config, Services& services);

// In-memory stores, a fresh registry, and a mock backend resolved from
// <project>/fixtures/backend.json under the configured backend id.
struct DefaultServices {
  op::InMemoryVersionStore version_store;
  op::MemoryStore memory_store;
  agents::Registry registry;
  res::ResourceManager resources;
  model::TemplateCatalog catalog;

  Services view();
};

void register_project_backend(res::ResourceManager& resources, const RunConfig& config);
std::unique_ptr<DefaultServices> make_default_services(const RunConfig& config);

}  // namespace hawk::crea
