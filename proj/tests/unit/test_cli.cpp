#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <string>
#include <vector>

#include "../support/helpers.hpp"
#include "robojudge/curation.hpp"
#include "robojudge/report.hpp"

namespace rj = robojudge;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;

namespace {

struct CliResult {
  int code = -1;
  std::string output;  // stdout and stderr interleaved
};

CliResult run_cli(const std::string& args) {
  std::string cmd = std::string(ROBOJUDGE_CLI_PATH) + " " + args + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  REQUIRE(pipe != nullptr);
  CliResult result;
  std::array<char, 4096> buf;
  std::size_t n = 0;
  while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) {
    result.output.append(buf.data(), n);
  }
  int status = ::pclose(pipe);
  result.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return result;
}

std::string q(const fs::path& p) { return "\"" + p.string() + "\""; }

// Two-task manifest for the curate flows. PickUp caps at 2 per quality level;
// MoveNear at 1.
void write_curation_manifest(const fs::path& path) {
  std::string lines;
  auto add = [&](const std::string& id, const std::string& task, const std::string& model,
                 const std::string& status, const std::string& quality) {
    nlohmann::json j{{"video_id", id},
                     {"video_path", "/data/" + id + ".mp4"},
                     {"task", task},
                     {"instruction", "Pick up the Orange"},
                     {"vla_model", model},
                     {"status", status}};
    if (!quality.empty()) j["quality"] = quality;
    lines += j.dump() + "\n";
  };
  add("h1", "PickUp", "OpenVLA", "Successful", "High");
  add("h2", "PickUp", "OpenVLA", "Successful", "High");
  add("h3", "PickUp", "Pi0", "Successful", "High");
  add("m1", "PickUp", "OpenVLA", "Successful", "Medium");
  add("m2", "PickUp", "Pi0", "Successful", "Medium");
  add("l1", "PickUp", "Pi0", "Successful", "Low");
  add("l2", "PickUp", "Pi0", "Successful", "Low");
  for (const std::string id : {"f1", "f2", "f3"}) add(id, "PickUp", "OpenVLA", "Failure", "");
  for (const std::string id : {"f4", "f5", "f6"}) add(id, "PickUp", "Pi0", "Failure", "");

  add("nh1", "MoveNear", "OpenVLA", "Successful", "High");
  add("nm1", "MoveNear", "OpenVLA", "Successful", "Medium");
  add("nl1", "MoveNear", "OpenVLA", "Successful", "Low");
  for (const std::string id : {"nf1", "nf2", "nf3"}) add(id, "MoveNear", "OpenVLA", "Failure", "");
  testutil::write_text(path, lines);
}

}  // namespace

TEST_CASE("cli requires a subcommand and offers help", "[cli]") {
  CHECK(run_cli("").code == 1);
  CHECK(run_cli("frobnicate").code == 1);
  CliResult help = run_cli("--help");
  CHECK(help.code == 0);
  CHECK_THAT(help.output, ContainsSubstring("curate"));
  CHECK_THAT(help.output, ContainsSubstring("assess"));
  CHECK_THAT(help.output, ContainsSubstring("replay"));
  CHECK_THAT(help.output, ContainsSubstring("compare"));
  CHECK_THAT(help.output, ContainsSubstring("report"));
}

TEST_CASE("cli curate prints a plan to stdout", "[cli]") {
  testutil::TempDir dir;
  fs::path manifest = dir.path / "manifest.jsonl";
  write_curation_manifest(manifest);

  CliResult result = run_cli("curate --manifest " + q(manifest));
  REQUIRE(result.code == 0);
  nlohmann::json doc = nlohmann::json::parse(result.output);
  CHECK(doc.at("schema") == "curation.v1");
  REQUIRE(doc.at("plans").size() == 2);
  CHECK(doc["plans"][0].at("task") == "MoveNear");  // default covers every task, sorted

  const nlohmann::json& pick_up = doc["plans"][1];
  CHECK(pick_up.at("task") == "PickUp");
  CHECK(pick_up.at("per_quality_cap") == 2);
  CHECK(pick_up["allocations"]["High"]["OpenVLA"] == nlohmann::json::array({"h1"}));
  CHECK(pick_up["allocations"]["High"]["Pi0"] == nlohmann::json::array({"h3"}));
  CHECK(pick_up["allocations"]["Low"]["Pi0"] == nlohmann::json::array({"l1", "l2"}));
  CHECK_FALSE(pick_up["allocations"]["Low"].contains("OpenVLA"));
  CHECK(pick_up.at("failure_selection") ==
        nlohmann::json::array({"f1", "f2", "f3", "f4", "f5", "f6"}));

  const nlohmann::json& summary = doc.at("summary");
  CHECK(summary.at("schema") == "curation_summary.v1");
  CHECK(summary["per_task"]["PickUp"]["successful"] == 6);
  CHECK(summary["per_task"]["PickUp"]["failing"] == 6);
  CHECK(summary.at("successful_total") == 9);
  CHECK(summary.at("overall_total") == 18);
}

TEST_CASE("cli curate writes a plan file and a selected manifest", "[cli]") {
  testutil::TempDir dir;
  fs::path manifest = dir.path / "manifest.jsonl";
  write_curation_manifest(manifest);
  fs::path plan_path = dir.path / "plan.json";
  fs::path selected = dir.path / "selected.jsonl";

  CliResult result = run_cli("curate --manifest " + q(manifest) + " --task PickUp --plan " +
                             q(plan_path) + " --selected-manifest " + q(selected));
  REQUIRE(result.code == 0);
  CHECK_THAT(result.output, ContainsSubstring("wrote " + plan_path.string()));
  CHECK_THAT(result.output, ContainsSubstring("wrote " + selected.string()));

  nlohmann::json doc = nlohmann::json::parse(testutil::read_text(plan_path));
  REQUIRE(doc.at("plans").size() == 1);
  CHECK(doc["plans"][0].at("task") == "PickUp");

  std::vector<rj::VideoEntry> entries = rj::load_manifest(selected);
  CHECK(entries.size() == 12);
  for (const rj::VideoEntry& e : entries) CHECK(e.task_id == "PickUp");
  // the selected subset is already balanced: curating it again is a no-op
  rj::CurationPlan again = rj::curate_balanced_subset(entries, "PickUp");
  CHECK(rj::to_json(again) == doc["plans"][0]);
}

TEST_CASE("cli curate propagates curation errors", "[cli]") {
  testutil::TempDir dir;
  fs::path manifest = dir.path / "manifest.jsonl";
  write_curation_manifest(manifest);

  CliResult unknown = run_cli("curate --manifest " + q(manifest) + " --task Bogus");
  CHECK(unknown.code == 1);
  CHECK_THAT(unknown.output, ContainsSubstring("no successful videos"));

  CliResult missing = run_cli("curate --manifest " + q(dir.path / "absent.jsonl"));
  CHECK(missing.code == 1);
}

TEST_CASE("cli assess, replay and report round trip", "[cli]") {
  std::vector<testutil::ScriptedVideo> videos;
  for (const testutil::ScriptedVideo& v : testutil::standard_videos()) {
    if (v.id == "pu01" || v.id == "pu03" || v.id == "pu06" || v.id == "pu08") {
      videos.push_back(v);
    }
  }
  testutil::TempDir dir;
  fs::path config = testutil::write_experiment(dir.path, videos);
  fs::path report_json = dir.path / "out" / "run_report.judge-a.json";

  CliResult live = run_cli("assess --config " + q(config));
  REQUIRE(live.code == 0);
  CHECK_THAT(live.output, ContainsSubstring("backend judge-a: 8 records, 0 failures"));
  CHECK_THAT(live.output, ContainsSubstring("wrote " + report_json.string()));
  REQUIRE(fs::exists(report_json));
  CHECK(fs::exists(dir.path / "out" / "run_report.judge-a.csv"));
  CHECK(fs::exists(dir.path / "out" / "run_report.judge-a.md"));
  CHECK(fs::exists(dir.path / "out" / "telemetry.judge-a.json"));
  std::string live_bytes = testutil::read_text(report_json);

  CliResult replay = run_cli("replay --config " + q(config));
  REQUIRE(replay.code == 0);
  CHECK_THAT(replay.output, ContainsSubstring("calls=0"));
  CHECK(testutil::read_text(report_json) == live_bytes);

  SECTION("render the run report in each format") {
    fs::path renders = dir.path / "renders";
    CliResult csv = run_cli("report --input " + q(report_json) + " --format csv --output-dir " +
                            q(renders));
    CHECK(csv.code == 0);
    std::string csv_text = testutil::read_text(renders / "run_report.judge-a.csv");
    CHECK(csv_text.rfind("backend,task,metric,mean,stddev\n", 0) == 0);

    CliResult md = run_cli("report --input " + q(report_json) + " --output-dir " + q(renders));
    CHECK(md.code == 0);
    CHECK_THAT(testutil::read_text(renders / "run_report.judge-a.md"),
               ContainsSubstring("# Assessment report: judge-a"));
  }
  SECTION("report refuses to overwrite its own input") {
    CliResult clobber = run_cli("report --input " + q(report_json) + " --format json");
    CHECK(clobber.code == 1);
    CHECK_THAT(clobber.output, ContainsSubstring("refusing to overwrite"));
    CHECK(testutil::read_text(report_json) == live_bytes);
  }
  SECTION("compare, then render the comparison") {
    fs::path cmp = dir.path / "cmp.json";
    CliResult compared = run_cli("compare --a " + q(report_json) + " --b " + q(report_json) +
                                 " --output " + q(cmp));
    REQUIRE(compared.code == 0);
    nlohmann::json doc = nlohmann::json::parse(testutil::read_text(cmp));
    CHECK(doc.at("schema") == "comparison_report.v1");
    CHECK_FALSE(doc.at("tests").empty());
    for (const auto& t : doc["tests"]) CHECK(t.at("a12").get<double>() == 0.5);

    fs::path renders = dir.path / "renders";
    CliResult rendered =
        run_cli("report --input " + q(cmp) + " --format csv --output-dir " + q(renders));
    CHECK(rendered.code == 0);
    CHECK(fs::exists(renders / "cmp.csv"));
    CHECK(fs::exists(renders / "cmp.correlations.csv"));
  }
}

TEST_CASE("cli report and compare reject malformed inputs", "[cli]") {
  testutil::TempDir dir;
  fs::path odd = dir.path / "odd.json";
  testutil::write_text(odd, "{\"schema\": \"mystery.v1\"}\n");
  CliResult unknown = run_cli("report --input " + q(odd));
  CHECK(unknown.code == 1);
  CHECK_THAT(unknown.output, ContainsSubstring("unrecognized schema"));

  CHECK(run_cli("report --input " + q(odd) + " --format xml").code == 1);
  CHECK(run_cli("compare --a " + q(dir.path / "a.json") + " --b " + q(odd)).code == 1);
}

TEST_CASE("cli exit codes distinguish budget stops and backend failures", "[cli]") {
  SECTION("partial results from a budget ceiling exit with 2") {
    testutil::TempDir dir;
    testutil::FixtureOptions opts;
    opts.repetitions = 1;
    opts.max_in_flight = 1;
    opts.budget_ceiling = 0.1;
    fs::path config = testutil::write_experiment(dir.path, testutil::standard_videos(), opts);
    nlohmann::json j = nlohmann::json::parse(testutil::read_text(config));
    j["backends"][0]["price_per_input_token"] = 1e-5;
    testutil::write_text(config, j.dump(2) + "\n");

    CliResult result = run_cli("assess --config " + q(config));
    CHECK(result.code == 2);
    CHECK_THAT(result.output, ContainsSubstring("PARTIAL results"));
    CHECK_THAT(result.output, ContainsSubstring("budget ceiling reached"));
  }
  SECTION("replay without a cache exits with 3") {
    testutil::TempDir dir;
    std::vector<testutil::ScriptedVideo> one;
    one.push_back(testutil::standard_videos()[0]);
    fs::path config = testutil::write_experiment(dir.path, one);
    CliResult result = run_cli("replay --config " + q(config));
    CHECK(result.code == 3);
    CHECK_THAT(result.output, ContainsSubstring("replay: no cached response"));
  }
}
