#pragma once

// Shared scaffolding for the unit and acceptance suites: temp dirs, fake
// decoder command lines, and builders for synthetic manifests, mock scripts
// and experiment configs.

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robojudge/robojudge.hpp"

namespace testutil {

namespace fs = std::filesystem;

inline std::string data_dir() { return ROBOJUDGE_TEST_DATA_DIR; }

inline std::string fake_decoder() { return FAKE_DECODER_PATH; }

struct TempDir {
  fs::path path;

  TempDir() {
    static std::atomic<unsigned> counter{0};
    path = fs::temp_directory_path() /
           ("robojudge-test-" + std::to_string(::getpid()) + "-" +
            std::to_string(counter.fetch_add(1)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
};

inline void write_text(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline std::string read_text(const fs::path& path) {
  return robojudge::read_file_text(path);
}

inline std::string probe_command() { return fake_decoder() + " probe {input}"; }

inline std::string extract_command() {
  return fake_decoder() +
         " extract {input} {indices} {output_dir} {max_dim} {format} {quality}";
}

inline robojudge::FrameExtractorConfig frames_config(int n_frames = 4) {
  robojudge::FrameExtractorConfig config;
  config.probe_command = probe_command();
  config.extract_command = extract_command();
  config.n_frames = n_frames;
  return config;
}

inline void write_video(const fs::path& path, int frames, const std::string& extra = "") {
  std::string line = "FRAMES " + std::to_string(frames);
  if (!extra.empty()) line += " " + extra;
  write_text(path, line + "\n");
}

inline nlohmann::json rules_json() {
  return nlohmann::json{
      {"High",
       "The robot completes the task smoothly with a stable grasp, no drops, no "
       "collisions, and no hesitation."},
      {"Medium",
       "The robot completes the task with minor defects such as hesitation, vibration, "
       "or a brief unstable grasp, but without drops or collisions."},
      {"Low",
       "The robot completes the task but with severe defects such as near-drops, "
       "collisions, or a barely stable grasp."}};
}

inline robojudge::DecisionRules rules() {
  nlohmann::json j = rules_json();
  return robojudge::DecisionRules{j["High"], j["Medium"], j["Low"]};
}

inline void write_rules(const fs::path& path) { write_text(path, rules_json().dump(2) + "\n"); }

// One scripted video: ground truth plus the mock's scripted verdicts.
struct ScriptedVideo {
  std::string id;
  std::string task;
  std::string model = "OpenVLA";
  std::string gt_status;                   // "Successful" | "Failure"
  std::string gt_quality;                  // "Low"/"Medium"/"High" when successful
  std::string predicted_status;            // same domain as gt_status
  std::string predicted_quality;           // lowercase; empty = no quality script
  std::string correctness_text_override;   // verbatim response text when set
};

inline nlohmann::json correctness_response(const std::string& status,
                                           const std::string& text_override = "") {
  std::string text = text_override.empty()
                         ? std::string("{\"status\": \"") + status + "\"}"
                         : text_override;
  nlohmann::json logprobs = nlohmann::json::array();
  double top = std::log(0.9), alt = std::log(0.1);
  if (status == "Successful") {
    logprobs.push_back({{"token", "Success"}, {"logprob", top}});
    logprobs.push_back({{"token", "Fail"}, {"logprob", alt}});
  } else {
    logprobs.push_back({{"token", "Fail"}, {"logprob", top}});
    logprobs.push_back({{"token", "Success"}, {"logprob", alt}});
  }
  return nlohmann::json{{"text", text},
                        {"label_token_logprobs", logprobs},
                        {"input_tokens", 7000},
                        {"output_tokens", 5},
                        {"latency_seconds", 0.25}};
}

inline nlohmann::json quality_response(const std::string& level_lower) {
  nlohmann::json logprobs = nlohmann::json::array();
  for (const char* token : {"high", "medium", "low"}) {
    double p = token == level_lower ? 0.8 : 0.1;
    logprobs.push_back({{"token", token}, {"logprob", std::log(p)}});
  }
  return nlohmann::json{{"text", "{\"quality\": \"" + level_lower + "\"}"},
                        {"label_token_logprobs", logprobs},
                        {"input_tokens", 7200},
                        {"output_tokens", 6},
                        {"latency_seconds", 0.3}};
}

inline nlohmann::json manifest_entry(const ScriptedVideo& v, const std::string& video_path) {
  nlohmann::json j{{"video_id", v.id},
                   {"video_path", video_path},
                   {"task", v.task},
                   {"instruction", "Pick up the Orange"},
                   {"vla_model", v.model},
                   {"status", v.gt_status}};
  if (v.gt_status == "Successful") j["quality"] = v.gt_quality;
  return j;
}

// Standard 24-video fixture: two tasks, three models, six successful and six
// failing videos per task. Per task and run the mock produces TP=5, FN=1,
// FP=1, TN=5; five of the six quality verdicts match ground truth.
inline std::vector<ScriptedVideo> standard_videos() {
  std::vector<ScriptedVideo> out;
  const char* models[3] = {"OpenVLA", "Pi0", "SpatialVLA"};
  for (const std::string task : {"PickUp", "PutIn"}) {
    const std::string p = task == "PickUp" ? "pu" : "pi";
    out.push_back({p + "01", task, models[0], "Successful", "High", "Successful", "high", ""});
    out.push_back({p + "02", task, models[1], "Successful", "High", "Successful", "high", ""});
    out.push_back({p + "03", task, models[1], "Successful", "Medium", "Successful", "medium", ""});
    out.push_back({p + "04", task, models[2], "Successful", "Medium", "Successful", "low", ""});
    out.push_back({p + "05", task, models[2], "Successful", "Low", "Successful", "low", ""});
    out.push_back({p + "06", task, models[0], "Successful", "Low", "Failure", "", ""});
    out.push_back({p + "07", task, models[0], "Failure", "", "Successful", "low", ""});
    out.push_back({p + "08", task, models[0], "Failure", "", "Failure", "", ""});
    out.push_back({p + "09", task, models[1], "Failure", "", "Failure", "", ""});
    out.push_back({p + "10", task, models[1], "Failure", "", "Failure", "", ""});
    out.push_back({p + "11", task, models[2], "Failure", "", "Failure", "", ""});
    out.push_back({p + "12", task, models[2], "Failure", "", "Failure", "", ""});
  }
  return out;
}

struct FixtureOptions {
  int repetitions = 2;
  int n_frames = 4;
  int random_delay_ms = 0;
  std::optional<double> budget_ceiling;
  bool share_cache_across_runs = false;
  bool always_ask_quality = false;
  std::string backend_id = "judge-a";
  std::string model_name = "vlm-alpha";
  int max_in_flight = 4;
};

// Writes videos, manifest, rules, mock script and config under root; returns
// the config path. All config paths are relative to exercise resolution.
inline fs::path write_experiment(const fs::path& root,
                                 const std::vector<ScriptedVideo>& videos,
                                 const FixtureOptions& opts = {}) {
  fs::create_directories(root / "videos");
  std::string manifest_lines;
  nlohmann::json script{{"responses", nlohmann::json::object()}};
  for (const ScriptedVideo& v : videos) {
    fs::path video_path = root / "videos" / (v.id + ".vid");
    write_video(video_path, 40, "seed=" + v.id);
    manifest_lines += manifest_entry(v, video_path.string()).dump() + "\n";
    script["responses"][v.id + "/correctness"] = nlohmann::json::array(
        {correctness_response(v.predicted_status, v.correctness_text_override)});
    if (!v.predicted_quality.empty()) {
      script["responses"][v.id + "/quality"] =
          nlohmann::json::array({quality_response(v.predicted_quality)});
    }
  }
  if (opts.random_delay_ms > 0) script["random_delay_ms"] = opts.random_delay_ms;
  write_text(root / "manifest.jsonl", manifest_lines);
  write_text(root / "script.json", script.dump(2) + "\n");
  write_rules(root / "rules.json");

  nlohmann::json backend{{"kind", "mock"},
                         {"script", "script.json"},
                         {"backend_id", opts.backend_id},
                         {"model_name", opts.model_name},
                         {"max_in_flight", opts.max_in_flight}};
  nlohmann::json config{{"manifest", "manifest.jsonl"},
                        {"repetitions", opts.repetitions},
                        {"decision_rules", "rules.json"},
                        {"cache_dir", "cache"},
                        {"output_dir", "out"},
                        {"share_cache_across_runs", opts.share_cache_across_runs},
                        {"always_ask_quality", opts.always_ask_quality},
                        {"frames",
                         {{"probe_command", probe_command()},
                          {"extract_command", extract_command()},
                          {"n_frames", opts.n_frames},
                          {"max_dim", 512},
                          {"format", "jpeg"},
                          {"quality", 85}}},
                        {"backends", nlohmann::json::array({backend})}};
  if (opts.budget_ceiling.has_value()) config["budget_ceiling"] = *opts.budget_ceiling;
  fs::path config_path = root / "config.json";
  write_text(config_path, config.dump(2) + "\n");
  return config_path;
}

}  // namespace testutil
