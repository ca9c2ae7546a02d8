#pragma once

#include <cstdio>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robojudge/metrics.hpp"
#include "robojudge/record.hpp"
#include "robojudge/stats.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

// Canonical order of the per-task summary metrics.
inline const std::vector<std::string>& report_metric_names() {
  static const std::vector<std::string> names = {
      "binary_precision",       "binary_recall",       "binary_f1",
      "quality_precision_micro", "quality_recall_micro", "quality_f1_micro",
      "quality_precision_macro", "quality_recall_macro", "quality_f1_macro",
      "mean_distance",          "mean_msp",            "mean_deepgini",
      "mean_entropy",           "mean_margin"};
  return names;
}

// Everything one backend produced over a whole experiment: raw-enough records
// plus per-task summaries. Summaries are recomputable from the records.
struct RunReport {
  std::string backend_id;
  std::string model_name;
  int repetitions = 1;
  bool partial = false;
  std::string partial_reason;
  std::vector<EvaluationRecord> records;    // sorted by (task, video, run)
  std::vector<AssessmentFailure> failures;  // sorted by (task, video, run, stage)
  std::map<std::string, std::vector<MetricSummary>> task_summaries;
  CostReadout aggregate_cost;  // sums of the per-record readouts

  friend bool operator==(const RunReport&, const RunReport&) = default;
};

struct MetricComparison {
  std::string task_id;
  std::string metric;
  UTestResult u_test;
  A12Result effect;

  friend bool operator==(const MetricComparison&, const MetricComparison&) = default;
};

// Spearman of an uncertainty measure against the distance over all records
// of one backend. Undefined correlations carry a note instead of a value.
struct UncertaintyCorrelation {
  std::string backend_id;
  std::string uncertainty_metric;
  long n = 0;
  std::optional<CorrelationResult> result;
  std::string note;

  friend bool operator==(const UncertaintyCorrelation&, const UncertaintyCorrelation&) = default;
};

struct ComparisonReport {
  std::string backend_a;
  std::string backend_b;
  int repetitions = 1;
  std::vector<MetricComparison> tests;               // sorted by (task, metric order)
  std::vector<UncertaintyCorrelation> correlations;  // sorted by (backend, metric)

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

inline nlohmann::json to_json(const MetricSummary& summary) {
  return nlohmann::json{{"metric", summary.metric_name},
                        {"mean", summary.mean},
                        {"stddev", summary.stddev},
                        {"per_run", summary.per_run}};
}

inline MetricSummary metric_summary_from_json(const nlohmann::json& j) {
  MetricSummary s;
  s.metric_name = j.at("metric").get<std::string>();
  s.mean = j.at("mean").get<double>();
  s.stddev = j.at("stddev").get<double>();
  s.per_run = j.at("per_run").get<std::vector<double>>();
  return s;
}

inline nlohmann::json to_json(const RunReport& report) {
  nlohmann::json records = nlohmann::json::array();
  for (const EvaluationRecord& r : report.records) records.push_back(to_json(r));
  nlohmann::json failures = nlohmann::json::array();
  for (const AssessmentFailure& f : report.failures) failures.push_back(to_json(f));
  nlohmann::json summaries = nlohmann::json::object();
  for (const auto& [task, metrics] : report.task_summaries) {
    nlohmann::json list = nlohmann::json::array();
    for (const MetricSummary& m : metrics) list.push_back(to_json(m));
    summaries[task] = std::move(list);
  }
  return nlohmann::json{{"schema", "run_report.v1"},
                        {"backend_id", report.backend_id},
                        {"model_name", report.model_name},
                        {"repetitions", report.repetitions},
                        {"partial", report.partial},
                        {"partial_reason", report.partial_reason},
                        {"records", std::move(records)},
                        {"failures", std::move(failures)},
                        {"task_summaries", std::move(summaries)},
                        {"aggregate_cost", to_json(report.aggregate_cost)}};
}

inline RunReport run_report_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "run_report.v1") {
    throw ValidationError("not a run report (missing schema tag)");
  }
  RunReport report;
  report.backend_id = j.at("backend_id").get<std::string>();
  report.model_name = j.at("model_name").get<std::string>();
  report.repetitions = j.at("repetitions").get<int>();
  report.partial = j.at("partial").get<bool>();
  report.partial_reason = j.at("partial_reason").get<std::string>();
  for (const auto& r : j.at("records")) {
    report.records.push_back(evaluation_record_from_json(r));
  }
  for (const auto& f : j.at("failures")) {
    report.failures.push_back(assessment_failure_from_json(f));
  }
  for (const auto& [task, list] : j.at("task_summaries").items()) {
    std::vector<MetricSummary> metrics;
    for (const auto& m : list) metrics.push_back(metric_summary_from_json(m));
    report.task_summaries[task] = std::move(metrics);
  }
  report.aggregate_cost = cost_from_json(j.at("aggregate_cost"));
  return report;
}

inline MwuMethod mwu_method_from_string(std::string_view s) {
  if (s == "exact") return MwuMethod::exact;
  if (s == "normal_approx_tie_corrected") return MwuMethod::normal_approx_tie_corrected;
  throw ValidationError("unknown MWU method: " + std::string(s));
}

inline EffectMagnitude effect_magnitude_from_string(std::string_view s) {
  if (s == "negligible") return EffectMagnitude::negligible;
  if (s == "small") return EffectMagnitude::small;
  if (s == "medium") return EffectMagnitude::medium;
  if (s == "large") return EffectMagnitude::large;
  throw ValidationError("unknown effect magnitude: " + std::string(s));
}

inline nlohmann::json to_json(const ComparisonReport& report) {
  nlohmann::json tests = nlohmann::json::array();
  for (const MetricComparison& t : report.tests) {
    tests.push_back({{"task", t.task_id},
                     {"metric", t.metric},
                     {"u_statistic", t.u_test.u_statistic},
                     {"p_value", t.u_test.p_value},
                     {"method", std::string(to_string(t.u_test.method))},
                     {"a12", t.effect.a12},
                     {"magnitude", std::string(to_string(t.effect.magnitude))}});
  }
  nlohmann::json correlations = nlohmann::json::array();
  for (const UncertaintyCorrelation& c : report.correlations) {
    correlations.push_back(
        {{"backend", c.backend_id},
         {"uncertainty_metric", c.uncertainty_metric},
         {"n", c.n},
         {"rho", c.result.has_value() ? nlohmann::json(c.result->rho) : nlohmann::json(nullptr)},
         {"p_value",
          c.result.has_value() ? nlohmann::json(c.result->p_value) : nlohmann::json(nullptr)},
         {"note", c.note}});
  }
  return nlohmann::json{{"schema", "comparison_report.v1"},
                        {"backend_a", report.backend_a},
                        {"backend_b", report.backend_b},
                        {"repetitions", report.repetitions},
                        {"tests", std::move(tests)},
                        {"correlations", std::move(correlations)}};
}

inline ComparisonReport comparison_report_from_json(const nlohmann::json& j) {
  if (j.value("schema", "") != "comparison_report.v1") {
    throw ValidationError("not a comparison report (missing schema tag)");
  }
  ComparisonReport report;
  report.backend_a = j.at("backend_a").get<std::string>();
  report.backend_b = j.at("backend_b").get<std::string>();
  report.repetitions = j.at("repetitions").get<int>();
  for (const auto& t : j.at("tests")) {
    MetricComparison mc;
    mc.task_id = t.at("task").get<std::string>();
    mc.metric = t.at("metric").get<std::string>();
    mc.u_test.u_statistic = t.at("u_statistic").get<double>();
    mc.u_test.p_value = t.at("p_value").get<double>();
    mc.u_test.method = mwu_method_from_string(t.at("method").get<std::string>());
    mc.effect.a12 = t.at("a12").get<double>();
    mc.effect.magnitude = effect_magnitude_from_string(t.at("magnitude").get<std::string>());
    report.tests.push_back(std::move(mc));
  }
  for (const auto& c : j.at("correlations")) {
    UncertaintyCorrelation uc;
    uc.backend_id = c.at("backend").get<std::string>();
    uc.uncertainty_metric = c.at("uncertainty_metric").get<std::string>();
    uc.n = c.at("n").get<long>();
    if (!c.at("rho").is_null()) {
      uc.result = CorrelationResult{c["rho"].get<double>(), c.at("p_value").get<double>()};
    }
    uc.note = c.at("note").get<std::string>();
    report.correlations.push_back(std::move(uc));
  }
  return report;
}

namespace detail {

inline std::string format_double(double v, const char* fmt) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), fmt, v);
  return buf;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += "\"";
  return out;
}

inline const MetricSummary* find_metric(const std::vector<MetricSummary>& metrics,
                                        const std::string& name) {
  for (const MetricSummary& m : metrics) {
    if (m.metric_name == name) return &m;
  }
  return nullptr;
}

// "0.7500 (0.0100)" cells for the markdown tables
inline std::string mean_sigma_cell(const std::vector<MetricSummary>& metrics,
                                   const std::string& name) {
  const MetricSummary* m = find_metric(metrics, name);
  if (m == nullptr) return "n/a";
  return format_double(m->mean, "%.4f") + " (" + format_double(m->stddev, "%.4f") + ")";
}

}  // namespace detail

// One row per (backend, task, metric).
inline std::string run_report_csv(const RunReport& report) {
  std::string out = "backend,task,metric,mean,stddev\n";
  for (const auto& [task, metrics] : report.task_summaries) {
    for (const MetricSummary& m : metrics) {
      out += detail::csv_escape(report.backend_id) + "," + detail::csv_escape(task) + "," +
             m.metric_name + "," + detail::format_double(m.mean, "%.9g") + "," +
             detail::format_double(m.stddev, "%.9g") + "\n";
    }
  }
  return out;
}

inline std::string run_report_markdown(const RunReport& report) {
  std::string out = "# Assessment report: " + report.backend_id + "\n\n";
  out += "Model: " + report.model_name + "  \n";
  out += "Repetitions: " + std::to_string(report.repetitions) + "  \n";
  out += "Records: " + std::to_string(report.records.size()) +
         ", assessment failures: " + std::to_string(report.failures.size()) + "\n";
  if (report.partial) {
    out += "\n**Partial results**: " + report.partial_reason + "\n";
  }
  struct Section {
    const char* heading;
    std::vector<std::pair<const char*, const char*>> columns;  // (title, metric)
  };
  const Section sections[] = {
      {"Correctness classification",
       {{"Precision", "binary_precision"},
        {"Recall", "binary_recall"},
        {"F1", "binary_f1"}}},
      {"Quality classification (micro)",
       {{"Precision", "quality_precision_micro"},
        {"Recall", "quality_recall_micro"},
        {"F1", "quality_f1_micro"}}},
      {"Quality classification (macro)",
       {{"Precision", "quality_precision_macro"},
        {"Recall", "quality_recall_macro"},
        {"F1", "quality_f1_macro"}}},
      {"Distance and uncertainty",
       {{"Distance", "mean_distance"},
        {"MSP", "mean_msp"},
        {"DeepGini", "mean_deepgini"},
        {"Entropy", "mean_entropy"},
        {"Margin", "mean_margin"}}}};
  for (const Section& section : sections) {
    out += "\n## " + std::string(section.heading) + "\n\n";
    out += "| Task |";
    for (const auto& [title, _] : section.columns) out += std::string(" ") + title + " |";
    out += "\n|---|";
    for (std::size_t i = 0; i < section.columns.size(); ++i) out += "---|";
    out += "\n";
    for (const auto& [task, metrics] : report.task_summaries) {
      out += "| " + task + " |";
      for (const auto& [_, metric] : section.columns) {
        out += " " + detail::mean_sigma_cell(metrics, metric) + " |";
      }
      out += "\n";
    }
  }
  out += "\n## Cost\n\n";
  out += "Input tokens: " + std::to_string(report.aggregate_cost.input_tokens) +
         ", output tokens: " + std::to_string(report.aggregate_cost.output_tokens) +
         ", spend: " + detail::format_double(report.aggregate_cost.currency, "%.4f") +
         ", summed latency: " +
         detail::format_double(report.aggregate_cost.latency_seconds, "%.2f") + " s\n";
  return out;
}

inline std::string comparison_report_csv(const ComparisonReport& report) {
  std::string out = "task,metric,u_statistic,p_value,method,a12,magnitude\n";
  for (const MetricComparison& t : report.tests) {
    out += detail::csv_escape(t.task_id) + "," + t.metric + "," +
           detail::format_double(t.u_test.u_statistic, "%.9g") + "," +
           detail::format_double(t.u_test.p_value, "%.9g") + "," +
           std::string(to_string(t.u_test.method)) + "," +
           detail::format_double(t.effect.a12, "%.9g") + "," +
           std::string(to_string(t.effect.magnitude)) + "\n";
  }
  return out;
}

inline std::string comparison_correlations_csv(const ComparisonReport& report) {
  std::string out = "backend,uncertainty_metric,n,rho,p_value,note\n";
  for (const UncertaintyCorrelation& c : report.correlations) {
    out += detail::csv_escape(c.backend_id) + "," + c.uncertainty_metric + "," +
           std::to_string(c.n) + ",";
    if (c.result.has_value()) {
      out += detail::format_double(c.result->rho, "%.9g") + "," +
             detail::format_double(c.result->p_value, "%.9g");
    } else {
      out += ",";
    }
    out += "," + detail::csv_escape(c.note) + "\n";
  }
  return out;
}

inline std::string comparison_report_markdown(const ComparisonReport& report) {
  std::string out = "# Backend comparison: " + report.backend_a + " vs " +
                    report.backend_b + "\n\n";
  out += "Repetitions: " + std::to_string(report.repetitions) + "\n";
  out += "\n## Per-metric tests\n\n";
  out += "| Task | Metric | U | p | A12 | Magnitude |\n|---|---|---|---|---|---|\n";
  for (const MetricComparison& t : report.tests) {
    out += "| " + t.task_id + " | " + t.metric + " | " +
           detail::format_double(t.u_test.u_statistic, "%.4g") + " | " +
           detail::format_double(t.u_test.p_value, "%.4g") + " | " +
           detail::format_double(t.effect.a12, "%.4f") + " | " +
           std::string(to_string(t.effect.magnitude)) + " |\n";
  }
  out += "\n## Uncertainty vs distance (Spearman)\n\n";
  out += "| Backend | Metric | n | rho | p |\n|---|---|---|---|---|\n";
  for (const UncertaintyCorrelation& c : report.correlations) {
    out += "| " + c.backend_id + " | " + c.uncertainty_metric + " | " +
           std::to_string(c.n) + " | ";
    if (c.result.has_value()) {
      out += detail::format_double(c.result->rho, "%.4f") + " | " +
             detail::format_double(c.result->p_value, "%.4g") + " |\n";
    } else {
      out += "n/a | n/a |\n";
    }
  }
  return out;
}

// Canonical byte form of any report JSON: sorted keys, two-space indent.
inline std::string canonical_json_text(const nlohmann::json& j) { return j.dump(2) + "\n"; }

inline void write_report_file(const std::filesystem::path& path, const std::string& content) {
  write_file_atomic(path, content);
}

}  // namespace robojudge
