// Command-line front end: curate, assess, replay, compare, report.

#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "robojudge/robojudge.hpp"

namespace fs = std::filesystem;
namespace rj = robojudge;

namespace {

struct CurateArgs {
  std::string manifest;
  std::vector<std::string> tasks;
  std::string plan_path;
  std::string selected_manifest;
};

struct RunArgs {
  std::string config_path;
  std::string output_dir;  // optional override
};

struct CompareArgs {
  std::string report_a;
  std::string report_b;
  std::string output;
};

struct ReportArgs {
  std::string input;
  std::string format = "markdown";
  std::string output_dir;
};

nlohmann::json manifest_line_json(const rj::VideoEntry& entry) {
  nlohmann::json j{{"video_id", entry.video_id},
                   {"video_path", entry.video_path},
                   {"task", entry.task_id},
                   {"instruction", entry.instruction},
                   {"vla_model", entry.vla_model},
                   {"status", std::string(rj::to_string(entry.ground_truth.correctness))}};
  if (entry.ground_truth.correctness == rj::CorrectnessLabel::successful) {
    j["quality"] = std::string(rj::to_string(entry.ground_truth.quality));
  }
  return j;
}

int run_curate(const CurateArgs& args) {
  std::vector<rj::VideoEntry> entries = rj::load_manifest(args.manifest);
  std::vector<std::string> tasks = args.tasks;
  if (tasks.empty()) {
    std::set<std::string> seen;
    for (const rj::VideoEntry& e : entries) seen.insert(e.task_id);
    tasks.assign(seen.begin(), seen.end());
  }
  std::vector<rj::CurationPlan> plans;
  plans.reserve(tasks.size());
  for (const std::string& task : tasks) {
    plans.push_back(rj::curate_balanced_subset(entries, task));
  }
  rj::CurationSummary summary = rj::curation_summary(plans);

  nlohmann::json doc{{"schema", "curation.v1"}};
  doc["plans"] = nlohmann::json::array();
  for (const rj::CurationPlan& plan : plans) doc["plans"].push_back(rj::to_json(plan));
  doc["summary"] = rj::to_json(summary);
  std::string text = rj::canonical_json_text(doc);
  if (args.plan_path.empty()) {
    std::cout << text;
  } else {
    rj::write_file_atomic(args.plan_path, text);
    std::cout << "wrote " << args.plan_path << "\n";
  }

  if (!args.selected_manifest.empty()) {
    std::map<std::string, const rj::VideoEntry*> by_id;
    for (const rj::VideoEntry& e : entries) by_id[e.video_id] = &e;
    std::string lines;
    for (const rj::CurationPlan& plan : plans) {
      for (const auto& [quality, models] : plan.allocations) {
        (void)quality;
        for (const auto& [model, ids] : models) {
          (void)model;
          for (const std::string& id : ids) {
            lines += manifest_line_json(*by_id.at(id)).dump() + "\n";
          }
        }
      }
      for (const std::string& id : plan.failure_selection) {
        lines += manifest_line_json(*by_id.at(id)).dump() + "\n";
      }
    }
    rj::write_file_atomic(args.selected_manifest, lines);
    std::cout << "wrote " << args.selected_manifest << "\n";
  }
  return 0;
}

int run_assess(const RunArgs& args, rj::RunMode mode) {
  rj::ExperimentConfig config = rj::load_experiment_config(args.config_path);
  if (!args.output_dir.empty()) config.output_dir = args.output_dir;
  std::vector<rj::RunOutcome> outcomes = rj::run_experiment(config, mode);
  bool budget_abort = false;
  for (const rj::RunOutcome& outcome : outcomes) {
    for (const fs::path& path : rj::write_run_outputs(outcome, config.output_dir)) {
      std::cout << "wrote " << path.string() << "\n";
    }
    const rj::RunReport& report = outcome.report;
    const rj::RunTelemetry& t = outcome.telemetry;
    std::cout << "backend " << report.backend_id << ": " << report.records.size()
              << " records, " << report.failures.size() << " failures, calls="
              << t.backend_calls << ", cache_hits=" << t.cache_hits << ", spend="
              << t.live_spend << " " << "(" << t.wall_seconds << "s)\n";
    if (report.partial) {
      std::cout << "backend " << report.backend_id
                << ": PARTIAL results: " << report.partial_reason << "\n";
      budget_abort = true;
    }
  }
  return budget_abort ? 2 : 0;
}

int run_compare(const CompareArgs& args) {
  rj::RunReport a =
      rj::run_report_from_json(nlohmann::json::parse(rj::read_file_text(args.report_a)));
  rj::RunReport b =
      rj::run_report_from_json(nlohmann::json::parse(rj::read_file_text(args.report_b)));
  rj::ComparisonReport comparison = rj::compare_backends(a, b);
  std::string text = rj::canonical_json_text(rj::to_json(comparison));
  if (args.output.empty()) {
    std::cout << text;
  } else {
    rj::write_file_atomic(args.output, text);
    std::cout << "wrote " << args.output << "\n";
  }
  return 0;
}

int run_report(const ReportArgs& args) {
  fs::path input(args.input);
  nlohmann::json j = nlohmann::json::parse(rj::read_file_text(input));
  std::string schema = j.value("schema", "");
  fs::path out_dir = args.output_dir.empty() ? input.parent_path() : fs::path(args.output_dir);
  std::string stem = input.stem().string();

  auto emit = [&](const fs::path& path, const std::string& content) {
    if (fs::exists(path) && fs::equivalent(path, input)) {
      throw rj::ValidationError("report: refusing to overwrite the input file");
    }
    rj::write_file_atomic(path, content);
    std::cout << "wrote " << path.string() << "\n";
  };

  if (schema == "run_report.v1") {
    rj::RunReport report = rj::run_report_from_json(j);
    if (args.format == "json") {
      emit(out_dir / (stem + ".json"), rj::canonical_json_text(rj::to_json(report)));
    } else if (args.format == "csv") {
      emit(out_dir / (stem + ".csv"), rj::run_report_csv(report));
    } else {
      emit(out_dir / (stem + ".md"), rj::run_report_markdown(report));
    }
    return 0;
  }
  if (schema == "comparison_report.v1") {
    rj::ComparisonReport report = rj::comparison_report_from_json(j);
    if (args.format == "json") {
      emit(out_dir / (stem + ".json"), rj::canonical_json_text(rj::to_json(report)));
    } else if (args.format == "csv") {
      emit(out_dir / (stem + ".csv"), rj::comparison_report_csv(report));
      emit(out_dir / (stem + ".correlations.csv"), rj::comparison_correlations_csv(report));
    } else {
      emit(out_dir / (stem + ".md"), rj::comparison_report_markdown(report));
    }
    return 0;
  }
  throw rj::ValidationError("report: unrecognized schema '" + schema + "' in " +
                            input.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"robojudge: VLM-as-judge oracle harness for robot task videos"};
  app.require_subcommand(1);

  CurateArgs curate_args;
  CLI::App* curate = app.add_subcommand(
      "curate", "Build a balanced evaluation subset from a video manifest");
  curate->add_option("--manifest", curate_args.manifest, "Manifest JSONL path")->required();
  curate->add_option("--task", curate_args.tasks,
                     "Task to include (repeatable; default: all tasks in the manifest)");
  curate->add_option("--plan", curate_args.plan_path, "Write the plan JSON here (default: stdout)");
  curate->add_option("--selected-manifest", curate_args.selected_manifest,
                     "Write the selected entries as a manifest JSONL");

  RunArgs assess_args;
  CLI::App* assess = app.add_subcommand("assess", "Run the assessment experiment live");
  assess->add_option("--config", assess_args.config_path, "Experiment config JSON")->required();
  assess->add_option("--output-dir", assess_args.output_dir, "Override the config output dir");

  RunArgs replay_args;
  CLI::App* replay = app.add_subcommand(
      "replay", "Re-run the experiment purely from the persisted response store");
  replay->add_option("--config", replay_args.config_path, "Experiment config JSON")->required();
  replay->add_option("--output-dir", replay_args.output_dir, "Override the config output dir");

  CompareArgs compare_args;
  CLI::App* compare = app.add_subcommand("compare", "Statistically compare two run reports");
  compare->add_option("--a", compare_args.report_a, "First run report JSON")->required();
  compare->add_option("--b", compare_args.report_b, "Second run report JSON")->required();
  compare->add_option("--output", compare_args.output,
                      "Write the comparison JSON here (default: stdout)");

  ReportArgs report_args;
  CLI::App* report = app.add_subcommand("report", "Render a report JSON to another format");
  report->add_option("--input", report_args.input, "Run or comparison report JSON")->required();
  report->add_option("--format", report_args.format, "json, csv, or markdown")
      ->check(CLI::IsMember({"json", "csv", "markdown"}));
  report->add_option("--output-dir", report_args.output_dir,
                     "Where to write (default: alongside the input)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (curate->parsed()) return run_curate(curate_args);
    if (assess->parsed()) return run_assess(assess_args, rj::RunMode::live);
    if (replay->parsed()) return run_assess(replay_args, rj::RunMode::replay);
    if (compare->parsed()) return run_compare(compare_args);
    if (report->parsed()) return run_report(report_args);
  } catch (const rj::BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const rj::BackendError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
