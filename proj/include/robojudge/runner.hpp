#pragma once

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "robojudge/backend.hpp"
#include "robojudge/curation.hpp"
#include "robojudge/frames.hpp"
#include "robojudge/http_backend.hpp"
#include "robojudge/metrics.hpp"
#include "robojudge/prompt.hpp"
#include "robojudge/record.hpp"
#include "robojudge/report.hpp"
#include "robojudge/stats.hpp"
#include "robojudge/util.hpp"
#include "robojudge/verdict.hpp"

namespace robojudge {

struct BackendSpec {
  std::string kind = "http";  // http | mock
  BackendSettings settings;
  std::optional<std::filesystem::path> script_path;  // mock only
};

struct ExperimentConfig {
  std::filesystem::path manifest_path;
  std::vector<std::string> tasks;  // empty = every task in the manifest
  std::vector<BackendSpec> backends;
  int repetitions = 10;
  FrameExtractorConfig frames;
  std::filesystem::path decision_rules_path;
  std::filesystem::path cache_dir;
  std::filesystem::path output_dir;
  std::optional<double> budget_ceiling;  // default for backends without their own
  unsigned random_seed = 0;              // reserved; the zero-temperature path is seed-free
  bool share_cache_across_runs = false;
  bool always_ask_quality = false;

  void validate() const {
    if (repetitions < 1) throw ValidationError("config: repetitions must be >= 1");
    if (backends.empty()) throw ValidationError("config: at least one backend required");
    std::set<std::string> ids;
    for (const BackendSpec& spec : backends) {
      spec.settings.validate();
      if (!ids.insert(spec.settings.backend_id).second) {
        throw ValidationError("config: duplicate backend_id '" + spec.settings.backend_id + "'");
      }
      if (spec.kind != "http" && spec.kind != "mock") {
        throw ValidationError("config: backend kind must be \"http\" or \"mock\"");
      }
      if (spec.kind == "mock" && !spec.script_path.has_value()) {
        throw ValidationError("config: mock backend '" + spec.settings.backend_id +
                              "' needs a script file");
      }
      if (spec.script_path.has_value() && !std::filesystem::exists(*spec.script_path)) {
        throw ValidationError("config: script not found: " + spec.script_path->string());
      }
      if (spec.kind == "http" && spec.settings.api_base_url.empty()) {
        throw ValidationError("config: http backend '" + spec.settings.backend_id +
                              "' needs api_base_url");
      }
    }
    if (!std::filesystem::exists(manifest_path)) {
      throw ValidationError("config: manifest not found: " + manifest_path.string());
    }
    if (!std::filesystem::exists(decision_rules_path)) {
      throw ValidationError("config: decision rules not found: " + decision_rules_path.string());
    }
    if (cache_dir.empty()) throw ValidationError("config: cache_dir not set");
    if (output_dir.empty()) throw ValidationError("config: output_dir not set");
    frames.validate();
    if (budget_ceiling.has_value() && *budget_ceiling < 0.0) {
      throw ValidationError("config: negative budget ceiling");
    }
  }
};

namespace detail {

inline std::filesystem::path resolve_against(const std::filesystem::path& base,
                                             const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

inline RetryPolicy retry_policy_from_json(const nlohmann::json& j) {
  RetryPolicy policy;
  policy.max_attempts = j.value("max_attempts", policy.max_attempts);
  policy.base_backoff_seconds = j.value("base_backoff_seconds", policy.base_backoff_seconds);
  policy.jitter_fraction = j.value("jitter_fraction", policy.jitter_fraction);
  return policy;
}

inline BackendSettings backend_settings_from_json(const nlohmann::json& j) {
  BackendSettings s;
  s.backend_id = j.at("backend_id").get<std::string>();
  s.model_name = j.at("model_name").get<std::string>();
  s.temperature = j.value("temperature", s.temperature);
  s.request_logprobs = j.value("request_logprobs", s.request_logprobs);
  s.top_logprobs = j.value("top_logprobs", s.top_logprobs);
  s.max_in_flight = j.value("max_in_flight", s.max_in_flight);
  if (j.contains("retry")) s.retry_policy = retry_policy_from_json(j["retry"]);
  s.timeout_seconds = j.value("timeout_seconds", s.timeout_seconds);
  s.price_per_input_token = j.value("price_per_input_token", s.price_per_input_token);
  s.price_per_output_token = j.value("price_per_output_token", s.price_per_output_token);
  s.currency = j.value("currency", s.currency);
  s.requests_per_minute = j.value("requests_per_minute", s.requests_per_minute);
  if (j.contains("max_spend_per_run") && !j["max_spend_per_run"].is_null()) {
    s.max_spend_per_run = j["max_spend_per_run"].get<double>();
  }
  s.api_base_url = j.value("api_base_url", s.api_base_url);
  s.api_path = j.value("api_path", s.api_path);
  s.api_key_env = j.value("api_key_env", s.api_key_env);
  return s;
}

// Config file is a single JSON document; relative paths resolve against the
// config file's own directory.
inline ExperimentConfig load_experiment_config(const std::filesystem::path& config_path) {
  nlohmann::json j = nlohmann::json::parse(read_file_text(config_path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("config is not a JSON object: " + config_path.string());
  }
  std::filesystem::path base = config_path.parent_path();
  ExperimentConfig config;
  config.manifest_path = detail::resolve_against(base, j.at("manifest").get<std::string>());
  if (j.contains("tasks")) config.tasks = j["tasks"].get<std::vector<std::string>>();
  config.repetitions = j.value("repetitions", config.repetitions);
  if (j.contains("frames")) {
    const nlohmann::json& f = j["frames"];
    config.frames.probe_command = f.value("probe_command", "");
    config.frames.extract_command = f.value("extract_command", "");
    config.frames.n_frames = f.value("n_frames", config.frames.n_frames);
    config.frames.max_dim = f.value("max_dim", config.frames.max_dim);
    config.frames.format = f.value("format", config.frames.format);
    config.frames.quality = f.value("quality", config.frames.quality);
  }
  config.decision_rules_path =
      detail::resolve_against(base, j.at("decision_rules").get<std::string>());
  config.cache_dir = detail::resolve_against(base, j.at("cache_dir").get<std::string>());
  config.output_dir = detail::resolve_against(base, j.at("output_dir").get<std::string>());
  if (j.contains("budget_ceiling") && !j["budget_ceiling"].is_null()) {
    config.budget_ceiling = j["budget_ceiling"].get<double>();
  }
  config.random_seed = j.value("random_seed", config.random_seed);
  config.share_cache_across_runs =
      j.value("share_cache_across_runs", config.share_cache_across_runs);
  config.always_ask_quality = j.value("always_ask_quality", config.always_ask_quality);
  for (const nlohmann::json& b : j.at("backends")) {
    BackendSpec spec;
    spec.kind = b.value("kind", "http");
    spec.settings = backend_settings_from_json(b);
    if (b.contains("script")) {
      spec.script_path = detail::resolve_against(base, b["script"].get<std::string>());
    }
    if (config.budget_ceiling.has_value() && !spec.settings.max_spend_per_run.has_value()) {
      spec.settings.max_spend_per_run = config.budget_ceiling;
    }
    config.backends.push_back(std::move(spec));
  }
  return config;
}

// Script entries only need "text"; tokens and latency default to zero.
inline RawResponse raw_response_from_script(const nlohmann::json& j) {
  RawResponse raw;
  raw.text = j.at("text").get<std::string>();
  if (j.contains("label_token_logprobs") && !j["label_token_logprobs"].is_null()) {
    std::vector<TokenLogprob> entries;
    for (const auto& t : j["label_token_logprobs"]) {
      entries.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    raw.label_token_logprobs = std::move(entries);
  }
  raw.input_tokens = j.value("input_tokens", 0L);
  raw.output_tokens = j.value("output_tokens", 0L);
  raw.latency_seconds = j.value("latency_seconds", 0.0);
  raw.validate();
  return raw;
}

inline std::unique_ptr<MockBackend> make_mock_backend(const BackendSettings& settings,
                                                      const std::filesystem::path& script_path) {
  nlohmann::json j = nlohmann::json::parse(read_file_text(script_path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("mock script is not a JSON object: " + script_path.string());
  }
  auto mock = std::make_unique<MockBackend>(settings);
  if (j.contains("default")) {
    mock->set_default_response(raw_response_from_script(j["default"]));
  }
  if (j.contains("responses")) {
    for (const auto& [key, value] : j["responses"].items()) {
      if (value.is_array()) {
        for (const auto& entry : value) mock->script(key, raw_response_from_script(entry));
      } else {
        mock->script(key, raw_response_from_script(value));
      }
    }
  }
  if (j.contains("random_delay_ms")) {
    mock->set_random_delay_ms(j["random_delay_ms"].get<int>());
  }
  return mock;
}

enum class RunMode { live, replay };

// Live-call accounting for one backend over a whole experiment. Kept out of
// RunReport so replay output stays byte-identical to the original run.
struct RunTelemetry {
  long backend_calls = 0;
  long cache_hits = 0;
  long live_input_tokens = 0;
  long live_output_tokens = 0;
  double live_spend = 0.0;
  double wall_seconds = 0.0;
};

inline nlohmann::json to_json(const RunTelemetry& t) {
  return nlohmann::json{{"schema", "telemetry.v1"},
                        {"backend_calls", t.backend_calls},
                        {"cache_hits", t.cache_hits},
                        {"live_input_tokens", t.live_input_tokens},
                        {"live_output_tokens", t.live_output_tokens},
                        {"live_spend", t.live_spend},
                        {"wall_seconds", t.wall_seconds}};
}

struct RunOutcome {
  RunReport report;
  RunTelemetry telemetry;
};

// Per-run metric vectors summarized across runs, in the canonical metric
// order. Runs in which a metric is undefined (no surviving records, or no
// both-successful quality pairs) are skipped for that metric.
inline std::map<std::string, std::vector<MetricSummary>> summarize_by_task(
    std::span<const EvaluationRecord> records, int repetitions) {
  std::map<std::string, std::map<int, std::vector<const EvaluationRecord*>>> grouped;
  for (const EvaluationRecord& r : records) grouped[r.task_id][r.run_index].push_back(&r);
  std::map<std::string, std::vector<MetricSummary>> out;
  for (const auto& [task, by_run] : grouped) {
    std::map<std::string, std::vector<double>> values;
    for (int run = 0; run < repetitions; ++run) {
      auto it = by_run.find(run);
      if (it == by_run.end() || it->second.empty()) continue;
      const std::vector<const EvaluationRecord*>& rs = it->second;
      std::vector<std::pair<CorrectnessLabel, CorrectnessLabel>> binary_pairs;
      std::vector<std::pair<QualityLevel, QualityLevel>> quality_pairs;
      double dist_sum = 0.0, msp_sum = 0.0, gini_sum = 0.0, entropy_sum = 0.0,
             margin_sum = 0.0;
      for (const EvaluationRecord* r : rs) {
        binary_pairs.emplace_back(r->ground_truth.correctness, r->prediction.correctness);
        if (r->ground_truth.correctness == CorrectnessLabel::successful &&
            r->prediction.correctness == CorrectnessLabel::successful) {
          quality_pairs.emplace_back(r->ground_truth.quality, r->prediction.quality);
        }
        dist_sum += r->distance.total;
        msp_sum += r->uncertainty.msp;
        gini_sum += r->uncertainty.deepgini;
        entropy_sum += r->uncertainty.entropy;
        margin_sum += r->uncertainty.margin;
      }
      const double count = static_cast<double>(rs.size());
      BinaryPrf b = binary_prf(binary_pairs);
      values["binary_precision"].push_back(b.precision);
      values["binary_recall"].push_back(b.recall);
      values["binary_f1"].push_back(b.f1);
      if (!quality_pairs.empty()) {
        MulticlassPrf m = multiclass_prf(quality_pairs);
        values["quality_precision_micro"].push_back(m.precision_micro);
        values["quality_recall_micro"].push_back(m.recall_micro);
        values["quality_f1_micro"].push_back(m.f1_micro);
        values["quality_precision_macro"].push_back(m.precision_macro);
        values["quality_recall_macro"].push_back(m.recall_macro);
        values["quality_f1_macro"].push_back(m.f1_macro);
      }
      values["mean_distance"].push_back(dist_sum / count);
      values["mean_msp"].push_back(msp_sum / count);
      values["mean_deepgini"].push_back(gini_sum / count);
      values["mean_entropy"].push_back(entropy_sum / count);
      values["mean_margin"].push_back(margin_sum / count);
    }
    std::vector<MetricSummary> metrics;
    for (const std::string& name : report_metric_names()) {
      auto found = values.find(name);
      if (found == values.end() || found->second.empty()) continue;
      metrics.push_back(summarize_runs(name, found->second));
    }
    out[task] = std::move(metrics);
  }
  return out;
}

namespace detail {

struct VideoJobResult {
  std::optional<EvaluationRecord> record;
  std::optional<AssessmentFailure> failure;
};

inline VideoJobResult assess_video(const VideoEntry& video, int run, Backend& backend,
                                   const FrameExtractor& extractor, const DecisionRules& rules,
                                   bool always_ask_quality, RunMode mode) {
  VideoJobResult out;
  auto fail = [&](const char* stage, std::string reason, std::string detail_text) {
    out.failure = AssessmentFailure{video.video_id, video.task_id,   video.vla_model,
                                    run,            stage,           std::move(reason),
                                    std::move(detail_text)};
  };

  FrameSequence frames;
  try {
    frames = extractor.extract(video.video_path, video.video_id);
  } catch (const DecodeError& e) {
    fail("frames", "decode_error", e.what());
    return out;
  }

  CostReadout cost;
  auto charge = [&](const RawResponse& raw) {
    cost.input_tokens += raw.input_tokens;
    cost.output_tokens += raw.output_tokens;
    cost.currency += response_cost(backend.settings(), raw);
    cost.latency_seconds += raw.latency_seconds;
  };

  PromptBundle correctness_bundle = render_correctness_prompt(video.instruction);
  RawResponse raw_correctness;
  try {
    raw_correctness = backend.assess(correctness_bundle, frames);
  } catch (const BackendError& e) {
    // bad credentials will not heal, and a replay miss means the cache is
    // incomplete; neither should degrade into per-video failures
    if (e.kind() == BackendError::Kind::auth || mode == RunMode::replay) throw;
    fail("correctness", std::string(to_string(e.kind())), e.what());
    return out;
  }
  charge(raw_correctness);

  CorrectnessLabel predicted_correctness;
  try {
    predicted_correctness = parse_correctness(raw_correctness.text);
  } catch (const ParseError& e) {
    fail("correctness", std::string(parse_error_code_name(e.code())), e.what());
    return out;
  }

  std::vector<std::string> anomalies;
  ClassDistribution correctness_dist = extract_class_distribution(
      raw_correctness.label_token_logprobs, correctness_class_labels(),
      correctness_token_prefix_map(), std::string(to_string(predicted_correctness)),
      &anomalies);

  std::optional<QualityLevel> predicted_quality;
  std::optional<ClassDistribution> quality_dist;
  const bool use_quality = predicted_correctness == CorrectnessLabel::successful;
  if (use_quality || always_ask_quality) {
    PromptBundle quality_bundle = render_quality_prompt(video.instruction, rules);
    RawResponse raw_quality;
    try {
      raw_quality = backend.assess(quality_bundle, frames);
    } catch (const BackendError& e) {
      if (e.kind() == BackendError::Kind::auth || mode == RunMode::replay) throw;
      fail("quality", std::string(to_string(e.kind())), e.what());
      return out;
    }
    charge(raw_quality);
    if (use_quality) {
      try {
        predicted_quality = parse_quality(raw_quality.text);
      } catch (const ParseError& e) {
        fail("quality", std::string(parse_error_code_name(e.code())), e.what());
        return out;
      }
      quality_dist = extract_class_distribution(
          raw_quality.label_token_logprobs, quality_class_labels(),
          quality_token_prefix_map(), std::string(to_string(*predicted_quality)),
          &anomalies);
    }
    // in always-ask mode a predicted failure still pays for (and persists)
    // the quality response, but the verdict is not consulted
  }

  Prediction prediction =
      make_prediction(predicted_correctness,
                      predicted_quality.value_or(QualityLevel::failure),
                      std::move(correctness_dist), std::move(quality_dist), &anomalies);
  DistanceBreakdown dist = distance(video.ground_truth, prediction);
  UncertaintyReadout unc = uncertainty(prediction.correctness_distribution);
  std::optional<UncertaintyReadout> quality_unc;
  if (prediction.quality_distribution.has_value()) {
    quality_unc = uncertainty(*prediction.quality_distribution);
  }
  EvaluationRecord record{.video_id = video.video_id,
                          .task_id = video.task_id,
                          .vla_model = video.vla_model,
                          .run_index = run,
                          .ground_truth = video.ground_truth,
                          .prediction = std::move(prediction),
                          .distance = dist,
                          .uncertainty = unc,
                          .quality_uncertainty = quality_unc,
                          .cost = cost,
                          .anomalies = std::move(anomalies)};
  record.validate();
  out.record = std::move(record);
  return out;
}

inline void sort_report_rows(RunReport& report) {
  std::sort(report.records.begin(), report.records.end(),
            [](const EvaluationRecord& a, const EvaluationRecord& b) {
              return std::tie(a.task_id, a.video_id, a.run_index) <
                     std::tie(b.task_id, b.video_id, b.run_index);
            });
  std::sort(report.failures.begin(), report.failures.end(),
            [](const AssessmentFailure& a, const AssessmentFailure& b) {
              return std::tie(a.task_id, a.video_id, a.run_index, a.stage) <
                     std::tie(b.task_id, b.video_id, b.run_index, b.stage);
            });
}

inline RunOutcome run_backend(const ExperimentConfig& config, const BackendSpec& spec,
                              RunMode mode, const std::vector<VideoEntry>& videos,
                              const DecisionRules& rules, const FrameExtractor& extractor) {
  auto wall_start = std::chrono::steady_clock::now();
  std::unique_ptr<Backend> inner;
  if (mode == RunMode::live) {
    if (spec.kind == "mock") {
      inner = make_mock_backend(spec.settings, *spec.script_path);
    } else {
      inner = std::make_unique<HttpBackend>(spec.settings);
    }
  }

  RunTelemetry telemetry;
  std::vector<EvaluationRecord> records;
  std::vector<AssessmentFailure> failures;
  bool partial = false;
  std::string partial_reason;

  for (int run = 0; run < config.repetitions && !partial; ++run) {
    std::string scope =
        config.share_cache_across_runs ? std::string("shared") : "run-" + std::to_string(run);
    ResponseStore store(config.cache_dir / "responses" / spec.settings.backend_id, scope);
    std::unique_ptr<CachingBackend> caching;
    std::unique_ptr<ReplayBackend> replaying;
    Backend* backend = nullptr;
    if (mode == RunMode::live) {
      caching = std::make_unique<CachingBackend>(*inner, store);
      backend = caching.get();
    } else {
      replaying = std::make_unique<ReplayBackend>(spec.settings, store);
      backend = replaying.get();
    }

    std::atomic<std::size_t> next{0};
    std::atomic<bool> stop{false};
    std::mutex sink_mutex;
    std::optional<BackendError> abort_error;
    auto worker = [&] {
      for (;;) {
        if (stop.load()) return;
        std::size_t i = next.fetch_add(1);
        if (i >= videos.size()) return;
        const VideoEntry& video = videos[i];
        try {
          VideoJobResult result = assess_video(video, run, *backend, extractor, rules,
                                               config.always_ask_quality, mode);
          std::lock_guard lock(sink_mutex);
          if (result.record.has_value()) records.push_back(std::move(*result.record));
          if (result.failure.has_value()) failures.push_back(std::move(*result.failure));
        } catch (const BudgetExceeded& e) {
          stop.store(true);
          std::lock_guard lock(sink_mutex);
          partial = true;
          partial_reason = std::string("budget ceiling reached: ") + e.what();
        } catch (const BackendError& e) {
          stop.store(true);
          std::lock_guard lock(sink_mutex);
          if (!abort_error.has_value()) abort_error = e;
        } catch (const std::exception& e) {
          std::lock_guard lock(sink_mutex);
          failures.push_back(AssessmentFailure{video.video_id, video.task_id,
                                               video.vla_model, run, "pipeline",
                                               "internal_error", e.what()});
        }
      }
    };
    int worker_count = std::max(1, std::min<int>(spec.settings.max_in_flight,
                                                 static_cast<int>(videos.size())));
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(worker_count));
    for (int w = 0; w < worker_count; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
    if (abort_error.has_value()) throw *abort_error;

    BackendTelemetry bt = caching ? caching->telemetry() : replaying->telemetry();
    telemetry.backend_calls += bt.backend_calls;
    telemetry.cache_hits += bt.cache_hits;
    telemetry.live_input_tokens += bt.live_input_tokens;
    telemetry.live_output_tokens += bt.live_output_tokens;
    telemetry.live_spend += bt.live_spend;
  }

  RunReport report;
  report.backend_id = spec.settings.backend_id;
  report.model_name = spec.settings.model_name;
  report.repetitions = config.repetitions;
  report.partial = partial;
  report.partial_reason = partial_reason;
  report.records = std::move(records);
  report.failures = std::move(failures);
  sort_report_rows(report);
  report.task_summaries = summarize_by_task(report.records, config.repetitions);
  for (const EvaluationRecord& r : report.records) {
    report.aggregate_cost.input_tokens += r.cost.input_tokens;
    report.aggregate_cost.output_tokens += r.cost.output_tokens;
    report.aggregate_cost.currency += r.cost.currency;
    report.aggregate_cost.latency_seconds += r.cost.latency_seconds;
  }
  telemetry.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();
  return RunOutcome{std::move(report), telemetry};
}

}  // namespace detail

inline std::vector<RunOutcome> run_experiment(const ExperimentConfig& config, RunMode mode) {
  config.validate();
  std::vector<VideoEntry> all_entries = load_manifest(config.manifest_path);
  std::vector<VideoEntry> videos;
  if (config.tasks.empty()) {
    videos = std::move(all_entries);
  } else {
    std::set<std::string> wanted(config.tasks.begin(), config.tasks.end());
    std::set<std::string> seen;
    for (VideoEntry& e : all_entries) {
      if (wanted.count(e.task_id) != 0) {
        seen.insert(e.task_id);
        videos.push_back(std::move(e));
      }
    }
    for (const std::string& task : wanted) {
      if (seen.count(task) == 0) {
        throw ValidationError("config: task '" + task + "' not present in the manifest");
      }
    }
  }
  if (videos.empty()) throw ValidationError("no videos selected for assessment");
  std::sort(videos.begin(), videos.end(), [](const VideoEntry& a, const VideoEntry& b) {
    return std::tie(a.task_id, a.video_id) < std::tie(b.task_id, b.video_id);
  });

  DecisionRules rules = load_decision_rules(config.decision_rules_path);
  FrameExtractorConfig frame_config = config.frames;
  frame_config.cache_dir = config.cache_dir / "frames";
  FrameExtractor extractor(frame_config);

  std::vector<RunOutcome> outcomes;
  for (const BackendSpec& spec : config.backends) {
    outcomes.push_back(detail::run_backend(config, spec, mode, videos, rules, extractor));
  }
  return outcomes;
}

// File layout for one outcome under output_dir. The telemetry file is the
// only part that differs between a live run and its replay.
inline std::vector<std::filesystem::path> write_run_outputs(
    const RunOutcome& outcome, const std::filesystem::path& output_dir) {
  const std::string& id = outcome.report.backend_id;
  std::vector<std::filesystem::path> written;
  auto emit = [&](const std::string& name, const std::string& content) {
    std::filesystem::path path = output_dir / name;
    write_file_atomic(path, content);
    written.push_back(path);
  };
  emit("run_report." + id + ".json", canonical_json_text(to_json(outcome.report)));
  emit("run_report." + id + ".csv", run_report_csv(outcome.report));
  emit("run_report." + id + ".md", run_report_markdown(outcome.report));
  emit("telemetry." + id + ".json", canonical_json_text(to_json(outcome.telemetry)));
  return written;
}

inline ComparisonReport compare_backends(const RunReport& a, const RunReport& b) {
  if (a.repetitions != b.repetitions) {
    throw ValidationError("compare: reports disagree on repetitions");
  }
  auto keys = [](const RunReport& r) {
    std::vector<std::string> out;
    for (const auto& [task, _] : r.task_summaries) out.push_back(task);
    return out;
  };
  if (keys(a) != keys(b)) throw ValidationError("compare: mismatched task sets");

  ComparisonReport report;
  report.backend_a = a.backend_id;
  report.backend_b = b.backend_id;
  report.repetitions = a.repetitions;
  for (const auto& [task, metrics_a] : a.task_summaries) {
    const std::vector<MetricSummary>& metrics_b = b.task_summaries.at(task);
    for (const std::string& name : report_metric_names()) {
      const MetricSummary* ma = detail::find_metric(metrics_a, name);
      const MetricSummary* mb = detail::find_metric(metrics_b, name);
      if ((ma == nullptr) != (mb == nullptr)) {
        throw ValidationError("compare: metric '" + name + "' defined for only one backend in task " + task);
      }
      if (ma == nullptr) continue;
      MetricComparison comparison;
      comparison.task_id = task;
      comparison.metric = name;
      comparison.u_test = mann_whitney_u(ma->per_run, mb->per_run);
      comparison.effect = vargha_delaney_a12(ma->per_run, mb->per_run);
      report.tests.push_back(std::move(comparison));
    }
  }

  const std::pair<const char*, double UncertaintyReadout::*> uncertainty_members[] = {
      {"msp", &UncertaintyReadout::msp},
      {"deepgini", &UncertaintyReadout::deepgini},
      {"entropy", &UncertaintyReadout::entropy},
      {"margin", &UncertaintyReadout::margin}};
  for (const RunReport* r : {&a, &b}) {
    std::vector<double> distances;
    distances.reserve(r->records.size());
    for (const EvaluationRecord& rec : r->records) {
      distances.push_back(static_cast<double>(rec.distance.total));
    }
    for (const auto& [name, member] : uncertainty_members) {
      std::vector<double> values;
      values.reserve(r->records.size());
      for (const EvaluationRecord& rec : r->records) values.push_back(rec.uncertainty.*member);
      UncertaintyCorrelation correlation;
      correlation.backend_id = r->backend_id;
      correlation.uncertainty_metric = name;
      correlation.n = static_cast<long>(values.size());
      try {
        correlation.result = spearman(values, distances);
      } catch (const StatError& e) {
        correlation.note = e.what();
      } catch (const ValidationError& e) {
        correlation.note = e.what();
      }
      report.correlations.push_back(std::move(correlation));
    }
    if (&a == &b) break;  // self-comparison: one correlation block
  }
  return report;
}

}  // namespace robojudge
