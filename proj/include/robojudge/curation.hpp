#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "robojudge/domain.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

struct VideoEntry {
  std::string video_id;
  std::string video_path;
  std::string task_id;
  std::string instruction;
  std::string vla_model;
  GroundTruth ground_truth;

  friend bool operator==(const VideoEntry&, const VideoEntry&) = default;
};

// Loads a UTF-8 manifest with one JSON object per line. Any bad line fails
// the whole load, naming the line number.
inline std::vector<VideoEntry> load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("manifest not found: " + path.string());
  std::vector<VideoEntry> entries;
  std::map<std::string, std::size_t> first_line_of;  // video_id -> line number
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json obj = nlohmann::json::parse(line, nullptr, false);
    if (obj.is_discarded() || !obj.is_object()) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": not a JSON object");
    }
    auto field = [&](const char* name) -> std::string {
      if (!obj.contains(name) || !obj[name].is_string() || obj[name].get<std::string>().empty()) {
        throw ValidationError("manifest line " + std::to_string(line_no) +
                              ": missing or empty field '" + name + "'");
      }
      return obj[name].get<std::string>();
    };
    VideoEntry entry;
    entry.video_id = field("video_id");
    entry.video_path = field("video_path");
    entry.task_id = field("task");
    entry.instruction = field("instruction");
    entry.vla_model = field("vla_model");
    std::string status = field("status");
    if (status != "Successful" && status != "Failure") {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": status must be \"Successful\" or \"Failure\"");
    }
    std::optional<QualityLevel> quality;
    if (obj.contains("quality")) {
      std::string q = field("quality");
      if (q != "Low" && q != "Medium" && q != "High") {
        throw ValidationError("manifest line " + std::to_string(line_no) +
                              ": quality must be \"Low\", \"Medium\" or \"High\"");
      }
      quality = quality_from_string(q);
    }
    if (status == "Failure" && quality.has_value()) {
      throw ValidationError("manifest line " + std::to_string(line_no) +
                            ": quality present for a failing video");
    }
    try {
      entry.ground_truth = make_ground_truth(correctness_from_string(status), quality);
    } catch (const ValidationError& e) {
      throw ValidationError("manifest line " + std::to_string(line_no) + ": " +
                            e.what());
    }
    auto [it, inserted] = first_line_of.emplace(entry.video_id, line_no);
    if (!inserted) {
      throw ValidationError("duplicate video_id '" + entry.video_id + "' on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    entries.push_back(std::move(entry));
  }
  return entries;
}

// Balanced selection for one task: equal counts per quality level, spread
// across VLA models by water-filling, and an equal number of failures.
struct CurationPlan {
  std::string task_id;
  int per_quality_cap = 0;
  // quality level -> model -> selected video ids (ascending)
  std::map<QualityLevel, std::map<std::string, std::vector<std::string>>> allocations;
  std::vector<std::string> failure_selection;

  int successful_total() const { return 3 * per_quality_cap; }
  int overall_total() const {
    return successful_total() + static_cast<int>(failure_selection.size());
  }

  friend bool operator==(const CurationPlan&, const CurationPlan&) = default;
};

namespace detail {

// Even split of `cap` across models, capped by availability. Shortfall from
// small models is redistributed among the rest; leftover units go one at a
// time in lexicographic model order.
inline std::map<std::string, int> water_fill(const std::map<std::string, int>& available,
                                             int cap) {
  std::map<std::string, int> alloc;
  long total_available = 0;
  for (const auto& [model, count] : available) {
    alloc[model] = 0;
    total_available += count;
  }
  if (total_available < cap) {
    throw ValidationError("insufficient videos: need " + std::to_string(cap) +
                          ", have " + std::to_string(total_available));
  }
  int remaining = cap;
  while (remaining > 0) {
    std::vector<std::string> active;
    for (const auto& [model, count] : available) {
      if (alloc[model] < count) active.push_back(model);
    }
    int target = remaining / static_cast<int>(active.size());
    if (target == 0) break;
    for (const auto& model : active) {
      int take = std::min(target, available.at(model) - alloc[model]);
      alloc[model] += take;
      remaining -= take;
    }
  }
  // remainder: fewer units than active models
  for (auto& [model, count] : alloc) {
    if (remaining == 0) break;
    if (count < available.at(model)) {
      ++count;
      --remaining;
    }
  }
  return alloc;
}

}  // namespace detail

inline CurationPlan curate_balanced_subset(std::span<const VideoEntry> entries,
                                           const std::string& task_id) {
  // bucket successful videos by (quality, model) and failures by model
  std::map<QualityLevel, std::map<std::string, std::vector<std::string>>> successful;
  std::map<std::string, std::vector<std::string>> failing;
  std::set<std::string> models;
  for (const auto& e : entries) {
    if (e.task_id != task_id) continue;
    models.insert(e.vla_model);
    if (e.ground_truth.correctness == CorrectnessLabel::successful) {
      successful[e.ground_truth.quality][e.vla_model].push_back(e.video_id);
    } else {
      failing[e.vla_model].push_back(e.video_id);
    }
  }
  constexpr QualityLevel kLevels[] = {QualityLevel::low, QualityLevel::medium,
                                      QualityLevel::high};
  int cap = 0;
  bool first = true;
  for (QualityLevel q : kLevels) {
    int total = 0;
    for (const auto& [model, ids] : successful[q]) total += static_cast<int>(ids.size());
    if (total == 0) {
      throw ValidationError("task '" + task_id + "' has no successful videos at quality " +
                            std::string(to_string(q)));
    }
    cap = first ? total : std::min(cap, total);
    first = false;
  }

  CurationPlan plan;
  plan.task_id = task_id;
  plan.per_quality_cap = cap;
  for (QualityLevel q : kLevels) {
    std::map<std::string, int> available;
    for (const std::string& model : models) {
      auto it = successful[q].find(model);
      available[model] = it == successful[q].end() ? 0 : static_cast<int>(it->second.size());
    }
    std::map<std::string, int> alloc = detail::water_fill(available, cap);
    for (const auto& [model, take] : alloc) {
      if (take == 0) continue;
      auto& ids = successful[q][model];
      std::sort(ids.begin(), ids.end());
      plan.allocations[q][model].assign(ids.begin(), ids.begin() + take);
    }
  }

  const int failures_needed = 3 * cap;
  std::map<std::string, int> failure_available;
  for (const std::string& model : models) {
    auto it = failing.find(model);
    failure_available[model] = it == failing.end() ? 0 : static_cast<int>(it->second.size());
  }
  std::map<std::string, int> failure_alloc;
  try {
    failure_alloc = detail::water_fill(failure_available, failures_needed);
  } catch (const ValidationError&) {
    throw ValidationError("task '" + task_id + "': insufficient failing videos to match " +
                          std::to_string(failures_needed) + " successful selections");
  }
  for (const auto& [model, take] : failure_alloc) {
    if (take == 0) continue;
    auto& ids = failing[model];
    std::sort(ids.begin(), ids.end());
    plan.failure_selection.insert(plan.failure_selection.end(), ids.begin(),
                                  ids.begin() + take);
  }
  return plan;
}

struct CurationSummary {
  struct TaskTotals {
    int successful = 0;
    int failing = 0;
    int total = 0;

    friend bool operator==(const TaskTotals&, const TaskTotals&) = default;
  };
  std::map<std::string, TaskTotals> per_task;
  int successful_total = 0;
  int failing_total = 0;
  int overall_total = 0;

  friend bool operator==(const CurationSummary&, const CurationSummary&) = default;
};

inline CurationSummary curation_summary(std::span<const CurationPlan> plans) {
  CurationSummary summary;
  for (const auto& plan : plans) {
    CurationSummary::TaskTotals totals;
    totals.successful = plan.successful_total();
    totals.failing = static_cast<int>(plan.failure_selection.size());
    totals.total = totals.successful + totals.failing;
    summary.per_task[plan.task_id] = totals;
    summary.successful_total += totals.successful;
    summary.failing_total += totals.failing;
    summary.overall_total += totals.total;
  }
  return summary;
}

inline nlohmann::json to_json(const CurationPlan& plan) {
  nlohmann::json allocations = nlohmann::json::object();
  for (const auto& [quality, per_model] : plan.allocations) {
    nlohmann::json models = nlohmann::json::object();
    for (const auto& [model, ids] : per_model) models[model] = ids;
    allocations[std::string(to_string(quality))] = std::move(models);
  }
  return nlohmann::json{{"schema", "curation_plan.v1"},
                        {"task", plan.task_id},
                        {"per_quality_cap", plan.per_quality_cap},
                        {"allocations", std::move(allocations)},
                        {"failure_selection", plan.failure_selection}};
}

inline CurationPlan curation_plan_from_json(const nlohmann::json& j) {
  CurationPlan plan;
  plan.task_id = j.at("task").get<std::string>();
  plan.per_quality_cap = j.at("per_quality_cap").get<int>();
  for (const auto& [quality, per_model] : j.at("allocations").items()) {
    for (const auto& [model, ids] : per_model.items()) {
      plan.allocations[quality_from_string(quality)][model] =
          ids.get<std::vector<std::string>>();
    }
  }
  plan.failure_selection = j.at("failure_selection").get<std::vector<std::string>>();
  return plan;
}

inline nlohmann::json to_json(const CurationSummary& summary) {
  nlohmann::json per_task = nlohmann::json::object();
  for (const auto& [task, totals] : summary.per_task) {
    per_task[task] = {{"successful", totals.successful},
                      {"failing", totals.failing},
                      {"total", totals.total}};
  }
  return nlohmann::json{{"schema", "curation_summary.v1"},
                        {"per_task", std::move(per_task)},
                        {"successful_total", summary.successful_total},
                        {"failing_total", summary.failing_total},
                        {"overall_total", summary.overall_total}};
}

}  // namespace robojudge
