#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "robojudge/distribution.hpp"
#include "robojudge/domain.hpp"
#include "robojudge/metrics.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

constexpr std::string_view to_string(BackendError::Kind kind) {
  switch (kind) {
    case BackendError::Kind::transient: return "transient";
    case BackendError::Kind::auth: return "auth";
    case BackendError::Kind::timeout: return "timeout";
    case BackendError::Kind::fatal: return "fatal";
    case BackendError::Kind::script: return "script";
  }
  return "unknown";
}

// One (video, run) assessment outcome, self-contained enough to recompute
// every derived number from the stored prediction.
struct EvaluationRecord {
  std::string video_id;
  std::string task_id;
  std::string vla_model;
  int run_index = 0;
  GroundTruth ground_truth;
  Prediction prediction;
  DistanceBreakdown distance;
  UncertaintyReadout uncertainty;  // over the correctness distribution
  std::optional<UncertaintyReadout> quality_uncertainty;
  CostReadout cost;
  std::vector<std::string> anomalies;

  void validate() const {
    if (video_id.empty() || task_id.empty()) {
      throw ValidationError("evaluation record: empty identifier");
    }
    if (run_index < 0) throw ValidationError("evaluation record: negative run index");
    if (robojudge::distance(ground_truth, prediction) != distance) {
      throw ValidationError("evaluation record: stored distance does not match "
                            "ground truth + prediction for video " + video_id);
    }
  }

  friend bool operator==(const EvaluationRecord&, const EvaluationRecord&) = default;
};

// A (video, run) that produced no usable verdict. Kept alongside records so
// nothing is silently dropped.
struct AssessmentFailure {
  std::string video_id;
  std::string task_id;
  std::string vla_model;
  int run_index = 0;
  std::string stage;        // frames | correctness | quality
  std::string reason_code;  // parse error code, backend error kind, decode_error
  std::string detail;

  friend bool operator==(const AssessmentFailure&, const AssessmentFailure&) = default;
};

inline nlohmann::json to_json(const ClassDistribution& dist) {
  return nlohmann::json{{"labels", dist.labels()}, {"probabilities", dist.probabilities()}};
}

inline ClassDistribution class_distribution_from_json(const nlohmann::json& j) {
  return ClassDistribution(j.at("labels").get<std::vector<std::string>>(),
                           j.at("probabilities").get<std::vector<double>>());
}

inline nlohmann::json to_json(const GroundTruth& truth) {
  return nlohmann::json{{"correctness", std::string(to_string(truth.correctness))},
                        {"quality", std::string(to_string(truth.quality))}};
}

inline GroundTruth ground_truth_from_json(const nlohmann::json& j) {
  CorrectnessLabel c = correctness_from_string(j.at("correctness").get<std::string>());
  QualityLevel q = quality_from_string(j.at("quality").get<std::string>());
  return make_ground_truth(c, q == QualityLevel::failure ? std::nullopt
                                                         : std::optional<QualityLevel>(q));
}

inline nlohmann::json to_json(const Prediction& prediction) {
  return nlohmann::json{
      {"correctness", std::string(to_string(prediction.correctness))},
      {"quality", std::string(to_string(prediction.quality))},
      {"correctness_distribution", to_json(prediction.correctness_distribution)},
      {"quality_distribution", prediction.quality_distribution.has_value()
                                   ? to_json(*prediction.quality_distribution)
                                   : nlohmann::json(nullptr)}};
}

inline Prediction prediction_from_json(const nlohmann::json& j) {
  std::optional<ClassDistribution> quality_distribution;
  if (!j.at("quality_distribution").is_null()) {
    quality_distribution = class_distribution_from_json(j["quality_distribution"]);
  }
  // argmax mismatches were flagged when the record was built; collect and
  // drop them here instead of rejecting the stored record
  std::vector<std::string> ignored;
  return make_prediction(correctness_from_string(j.at("correctness").get<std::string>()),
                         quality_from_string(j.at("quality").get<std::string>()),
                         class_distribution_from_json(j.at("correctness_distribution")),
                         std::move(quality_distribution), &ignored);
}

inline nlohmann::json to_json(const DistanceBreakdown& d) {
  return nlohmann::json{{"correctness_penalty", d.correctness_penalty},
                        {"quality_gap", d.quality_gap},
                        {"total", d.total}};
}

inline DistanceBreakdown distance_from_json(const nlohmann::json& j) {
  return DistanceBreakdown{j.at("correctness_penalty").get<int>(),
                           j.at("quality_gap").get<int>(), j.at("total").get<int>()};
}

inline nlohmann::json to_json(const UncertaintyReadout& u) {
  return nlohmann::json{{"msp", u.msp},
                        {"deepgini", u.deepgini},
                        {"entropy", u.entropy},
                        {"entropy_bits", u.entropy / std::log(2.0)},
                        {"margin", u.margin}};
}

inline UncertaintyReadout uncertainty_from_json(const nlohmann::json& j) {
  UncertaintyReadout u;
  u.msp = j.at("msp").get<double>();
  u.deepgini = j.at("deepgini").get<double>();
  u.entropy = j.at("entropy").get<double>();  // entropy_bits is derived
  u.margin = j.at("margin").get<double>();
  return u;
}

inline nlohmann::json to_json(const CostReadout& c) {
  return nlohmann::json{{"input_tokens", c.input_tokens},
                        {"output_tokens", c.output_tokens},
                        {"currency", c.currency},
                        {"latency_seconds", c.latency_seconds}};
}

inline CostReadout cost_from_json(const nlohmann::json& j) {
  CostReadout c;
  c.input_tokens = j.at("input_tokens").get<long>();
  c.output_tokens = j.at("output_tokens").get<long>();
  c.currency = j.at("currency").get<double>();
  c.latency_seconds = j.at("latency_seconds").get<double>();
  return c;
}

inline nlohmann::json to_json(const EvaluationRecord& record) {
  return nlohmann::json{
      {"video_id", record.video_id},
      {"task_id", record.task_id},
      {"vla_model", record.vla_model},
      {"run_index", record.run_index},
      {"ground_truth", to_json(record.ground_truth)},
      {"prediction", to_json(record.prediction)},
      {"distance", to_json(record.distance)},
      {"uncertainty", to_json(record.uncertainty)},
      {"quality_uncertainty", record.quality_uncertainty.has_value()
                                  ? to_json(*record.quality_uncertainty)
                                  : nlohmann::json(nullptr)},
      {"cost", to_json(record.cost)},
      {"anomalies", record.anomalies}};
}

inline EvaluationRecord evaluation_record_from_json(const nlohmann::json& j) {
  std::optional<UncertaintyReadout> quality_uncertainty;
  if (!j.at("quality_uncertainty").is_null()) {
    quality_uncertainty = uncertainty_from_json(j["quality_uncertainty"]);
  }
  EvaluationRecord record{
      .video_id = j.at("video_id").get<std::string>(),
      .task_id = j.at("task_id").get<std::string>(),
      .vla_model = j.at("vla_model").get<std::string>(),
      .run_index = j.at("run_index").get<int>(),
      .ground_truth = ground_truth_from_json(j.at("ground_truth")),
      .prediction = prediction_from_json(j.at("prediction")),
      .distance = distance_from_json(j.at("distance")),
      .uncertainty = uncertainty_from_json(j.at("uncertainty")),
      .quality_uncertainty = quality_uncertainty,
      .cost = cost_from_json(j.at("cost")),
      .anomalies = j.at("anomalies").get<std::vector<std::string>>()};
  record.validate();
  return record;
}

inline nlohmann::json to_json(const AssessmentFailure& failure) {
  return nlohmann::json{{"video_id", failure.video_id},
                        {"task_id", failure.task_id},
                        {"vla_model", failure.vla_model},
                        {"run_index", failure.run_index},
                        {"stage", failure.stage},
                        {"reason_code", failure.reason_code},
                        {"detail", failure.detail}};
}

inline AssessmentFailure assessment_failure_from_json(const nlohmann::json& j) {
  return AssessmentFailure{j.at("video_id").get<std::string>(),
                           j.at("task_id").get<std::string>(),
                           j.at("vla_model").get<std::string>(),
                           j.at("run_index").get<int>(),
                           j.at("stage").get<std::string>(),
                           j.at("reason_code").get<std::string>(),
                           j.at("detail").get<std::string>()};
}

}  // namespace robojudge
