#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "robojudge/distribution.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

// Binary task-correctness verdict.
enum class CorrectnessLabel { successful, failure };

// Ordinal execution-quality scale. Failure is the lowest rung so the
// misclassification distance is total over all outcomes.
enum class QualityLevel : int { failure = 0, low = 1, medium = 2, high = 3 };

constexpr int quality_to_ordinal(QualityLevel q) noexcept {
  return static_cast<int>(q);
}

inline std::string_view to_string(CorrectnessLabel c) {
  return c == CorrectnessLabel::successful ? "Successful" : "Failure";
}

inline std::string_view to_string(QualityLevel q) {
  switch (q) {
    case QualityLevel::failure: return "Failure";
    case QualityLevel::low: return "Low";
    case QualityLevel::medium: return "Medium";
    case QualityLevel::high: return "High";
  }
  throw ValidationError("invalid quality level");
}

inline CorrectnessLabel correctness_from_string(std::string_view s) {
  if (s == "Successful") return CorrectnessLabel::successful;
  if (s == "Failure") return CorrectnessLabel::failure;
  throw ValidationError("unknown correctness label: " + std::string(s));
}

inline QualityLevel quality_from_string(std::string_view s) {
  if (s == "Failure") return QualityLevel::failure;
  if (s == "Low") return QualityLevel::low;
  if (s == "Medium") return QualityLevel::medium;
  if (s == "High") return QualityLevel::high;
  throw ValidationError("unknown quality level: " + std::string(s));
}

// Label sets for the two verdict distributions, in canonical order.
inline std::vector<std::string> correctness_class_labels() {
  return {"Successful", "Failure"};
}

inline std::vector<std::string> quality_class_labels() {
  return {"High", "Medium", "Low"};
}

// One benchmark task family and the instruction substituted into prompts.
struct TaskSpec {
  std::string task_id;
  std::string instruction;

  TaskSpec(std::string id, std::string instr)
      : task_id(std::move(id)), instruction(std::move(instr)) {
    if (task_id.empty()) throw ValidationError("task_id must be non-empty");
    if (instruction.empty()) throw ValidationError("instruction must be non-empty");
  }
};

struct GroundTruth {
  CorrectnessLabel correctness = CorrectnessLabel::failure;
  QualityLevel quality = QualityLevel::failure;

  friend bool operator==(const GroundTruth&, const GroundTruth&) = default;
};

// Failing executions carry quality Failure(0); successful ones need an
// explicit quality in {Low, Medium, High}.
inline GroundTruth make_ground_truth(CorrectnessLabel status,
                                     std::optional<QualityLevel> quality) {
  if (status == CorrectnessLabel::failure) {
    if (quality.has_value() && *quality != QualityLevel::failure) {
      throw ValidationError("failing execution cannot carry a non-Failure quality");
    }
    return GroundTruth{CorrectnessLabel::failure, QualityLevel::failure};
  }
  if (!quality.has_value()) {
    throw ValidationError("successful execution requires an explicit quality");
  }
  if (*quality == QualityLevel::failure) {
    throw ValidationError("successful execution cannot have quality Failure");
  }
  return GroundTruth{CorrectnessLabel::successful, *quality};
}

struct Prediction {
  CorrectnessLabel correctness = CorrectnessLabel::failure;
  QualityLevel quality = QualityLevel::failure;
  ClassDistribution correctness_distribution;
  std::optional<ClassDistribution> quality_distribution;

  friend bool operator==(const Prediction&, const Prediction&) = default;
};

// Validates the structural invariants and reports (without resolving) any
// argmax/label disagreement through `anomalies`.
inline Prediction make_prediction(CorrectnessLabel correctness,
                                  QualityLevel quality,
                                  ClassDistribution correctness_distribution,
                                  std::optional<ClassDistribution> quality_distribution,
                                  std::vector<std::string>* anomalies = nullptr) {
  if (correctness_distribution.size() != 2) {
    throw ValidationError("correctness distribution must have 2 classes");
  }
  if (correctness == CorrectnessLabel::failure) {
    if (quality != QualityLevel::failure) {
      throw ValidationError("predicted failure forces quality Failure");
    }
    if (quality_distribution.has_value()) {
      throw ValidationError("predicted failure cannot carry a quality distribution");
    }
  } else {
    if (quality == QualityLevel::failure) {
      throw ValidationError("predicted success requires quality in {Low, Medium, High}");
    }
    if (quality_distribution.has_value() && quality_distribution->size() != 3) {
      throw ValidationError("quality distribution must have 3 classes");
    }
  }
  if (correctness_distribution.argmax_label() != to_string(correctness)) {
    if (anomalies) {
      anomalies->push_back("correctness_distribution_argmax_mismatch");
    } else {
      throw ValidationError("correctness distribution argmax disagrees with label");
    }
  }
  if (quality_distribution.has_value() &&
      quality_distribution->argmax_label() != to_string(quality)) {
    if (anomalies) {
      anomalies->push_back("quality_distribution_argmax_mismatch");
    } else {
      throw ValidationError("quality distribution argmax disagrees with label");
    }
  }
  return Prediction{correctness, quality, std::move(correctness_distribution),
                    std::move(quality_distribution)};
}

// Per-assessment resource usage, carried through to reports.
struct CostReadout {
  long input_tokens = 0;
  long output_tokens = 0;
  double currency = 0.0;
  double latency_seconds = 0.0;

  friend bool operator==(const CostReadout&, const CostReadout&) = default;
};

}  // namespace robojudge
