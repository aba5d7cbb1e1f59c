#include <doctest.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include <json.hpp>

#include "hawk/util.hpp"

using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

const std::string kCli = HAWK_CLI_PATH;
const fs::path kSpecs = fs::path(HAWK_FIXTURES_DIR) / "specs";
const fs::path kDnf = fs::path(HAWK_FIXTURES_DIR) / "dnf";
const fs::path kDemo = fs::path(HAWK_FIXTURES_DIR) / "demo_story";

struct CliResult {
  int code = -1;
  std::string out;
};

CliResult run_cli(const std::string& args) {
  std::string command = kCli + " " + args + " 2>&1";
  std::array<char, 4096> buffer{};
  CliResult result;
  FILE* pipe = popen(command.c_str(), "r");
  REQUIRE(pipe != nullptr);
  while (std::size_t n = fread(buffer.data(), 1, buffer.size(), pipe))
    result.out.append(buffer.data(), n);
  int status = pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

fs::path fresh_dir(const std::string& name) {
  auto dir = fs::temp_directory_path() / "hawk_cli_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("validate: ok spec exits 0, cyclic spec exits 1 with the cycle printed") {
  auto ok = run_cli("validate --spec " + (kSpecs / "chain.json").string());
  CHECK(ok.code == 0);

  auto bad = run_cli("validate --spec " + (kSpecs / "cyclic.json").string());
  CHECK(bad.code == 1);
  CHECK(bad.out.find("cycle") != std::string::npos);
  CHECK(bad.out.find("A") != std::string::npos);
}

TEST_CASE("plan prints the stage decomposition") {
  auto result = run_cli("plan --spec " + (kSpecs / "diamond.json").string());
  CHECK(result.code == 0);
  CHECK(result.out == "[[A],[B,C],[D]]\n");

  auto as_json = run_cli("plan --spec " + (kSpecs / "diamond.json").string() + " --json");
  CHECK(as_json.code == 0);
  auto doc = json::parse(as_json.out);
  CHECK(doc.at("stages").size() == 3);
}

TEST_CASE("run: exit 0 iff all nodes succeeded") {
  auto ok = run_cli("run --spec " + (kSpecs / "chain.json").string() + " --seed 1");
  CHECK(ok.code == 0);
  CHECK(ok.out.find("all nodes succeeded") != std::string::npos);

  auto failing = run_cli("run --spec " + (kSpecs / "failing.json").string() + " --seed 1");
  CHECK(failing.code == 1);
  CHECK(failing.out.find("cancelled") != std::string::npos);
}

TEST_CASE("run --events exports well-formed ndjson") {
  auto dir = fresh_dir("events");
  auto events_file = dir / "log.ndjson";
  auto result = run_cli("run --spec " + (kSpecs / "chain.json").string() + " --events " +
                        events_file.string());
  CHECK(result.code == 0);
  REQUIRE(fs::exists(events_file));
  std::istringstream in(hawk::util::read_file(events_file));
  std::string line;
  int lines = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto doc = json::parse(line);
    CHECK(doc.size() == 5);
    ++lines;
  }
  CHECK(lines >= 6);  // scheduled+started+succeeded for three nodes
}

TEST_CASE("usage errors exit 2") {
  CHECK(run_cli("definitely-not-a-command").code == 2);
  CHECK(run_cli("plan").code == 2);       // missing required --spec
  CHECK(run_cli("dnf train").code == 2);  // missing required --data
}

TEST_CASE("environment errors exit 3") {
  CHECK(run_cli("plan --spec /nonexistent/path.json").code == 3);
  auto missing_key = run_cli("versions anything --root /nonexistent/store");
  CHECK(missing_key.code == 1);  // store root exists after open; key does not
}

TEST_CASE("dnf train / eval / rules round-trip on the truth-table dataset") {
  auto dir = fresh_dir("dnf");
  auto model_file = dir / "model.json";
  auto data = (kDnf / "and_or_not.json").string();

  auto trained = run_cli("dnf train --data " + data + " --clauses 4 --lr 0.05 --epochs 2000" +
                         " --seed 7 --out " + model_file.string());
  CHECK(trained.code == 0);
  REQUIRE(fs::exists(model_file));

  auto evaluated = run_cli("dnf eval --model " + model_file.string() + " --data " + data);
  CHECK(evaluated.code == 0);
  CHECK(evaluated.out.find("accuracy 1.000") != std::string::npos);

  auto rules = run_cli("dnf rules --model " + model_file.string());
  CHECK(rules.code == 0);
  CHECK(rules.out.find("label 1:") != std::string::npos);

  auto eval_json = run_cli("dnf eval --model " + model_file.string() + " --data " + data +
                           " --json");
  auto doc = json::parse(eval_json.out);
  CHECK(doc.at("accuracy") == 1.0);
}

TEST_CASE("json output is a single document with identical bytes across reruns") {
  std::string args = "run --spec " + (kSpecs / "chain.json").string() + " --seed 9 --json";
  auto first = run_cli(args);
  auto second = run_cli(args);
  CHECK(first.code == 0);
  CHECK(first.out == second.out);
  auto doc = json::parse(first.out);  // parses as one document
  CHECK(doc.at("all_succeeded") == true);
  CHECK(doc.at("nodes").at("A").at("status") == "succeeded");
}

TEST_CASE("creagentive run writes the novel and the store supports versions listing") {
  auto out = fresh_dir("story_out");
  auto store = fresh_dir("story_store");
  auto result = run_cli("creagentive run --project " + kDemo.string() + " --candidates 3" +
                        " --seed 0 --max-chapters 10 --out " + out.string() + " --store " +
                        store.string());
  CHECK(result.code == 0);
  CHECK(fs::exists(out / "novel.md"));
  CHECK(fs::exists(out / "run.events.ndjson"));

  auto versions = run_cli("versions world --root " + store.string());
  CHECK(versions.code == 0);
  CHECK(versions.out.find("v0") != std::string::npos);
  CHECK(versions.out.find("v3") != std::string::npos);

  auto unknown = run_cli("versions nothing --root " + store.string());
  CHECK(unknown.code == 1);

  // byte-identical novel across reruns with the same seed
  auto out2 = fresh_dir("story_out2");
  auto result2 = run_cli("creagentive run --project " + kDemo.string() + " --candidates 3" +
                         " --seed 0 --max-chapters 10 --out " + out2.string());
  CHECK(result2.code == 0);
  CHECK(hawk::util::read_file(out / "novel.md") == hawk::util::read_file(out2 / "novel.md"));
}

TEST_CASE("agents lifecycle through the cli") {
  auto dir = fresh_dir("agents");
  auto registry = (dir / "registry.json").string();
  auto spec_file = dir / "writer.json";
  hawk::util::write_file(spec_file, json{{"name", "writer"},
                                         {"version", "1.0.0"},
                                         {"capabilities", {"write-chapter"}}}
                                        .dump());

  auto published =
      run_cli("agents --registry " + registry + " publish " + spec_file.string());
  CHECK(published.code == 0);
  CHECK(published.out.find("writer@1.0.0") != std::string::npos);

  // callable endpoints cannot be probed from a fresh process; a dead remote
  // endpoint is refused with an environment error
  auto dead = run_cli("agents --registry " + registry +
                      " register writer@1.0.0 http://127.0.0.1:59999");
  CHECK(dead.code == 3);

  auto listed = run_cli("agents --registry " + registry + " list");
  CHECK(listed.code == 0);
  CHECK(listed.out.find("published") != std::string::npos);

  auto retired = run_cli("agents --registry " + registry + " retire writer@1.0.0");
  CHECK(retired.code == 0);
  auto listed_again = run_cli("agents --registry " + registry + " list --json");
  auto doc = json::parse(listed_again.out);
  CHECK(doc.at(0).at("status") == "retired");
}
