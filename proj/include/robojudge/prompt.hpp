#pragma once

#include <cmath>
#include <filesystem>
#include <string>
#include <string_view>

#include "json.hpp"
#include "robojudge/domain.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

// One short rule sentence per quality level.
struct DecisionRules {
  std::string high;
  std::string medium;
  std::string low;

  void validate() const {
    if (high.empty() || medium.empty() || low.empty()) {
      throw ValidationError("decision rules: all three quality bands need a description");
    }
  }

  friend bool operator==(const DecisionRules&, const DecisionRules&) = default;
};

inline DecisionRules load_decision_rules(const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_file_text(path), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw ValidationError("decision rules file is not a JSON object: " + path.string());
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "High" && key != "Medium" && key != "Low") {
      throw ValidationError("decision rules: unexpected key '" + key + "'");
    }
    if (!value.is_string() || value.get<std::string>().empty()) {
      throw ValidationError("decision rules: '" + key + "' must be a non-empty string");
    }
  }
  for (const char* key : {"High", "Medium", "Low"}) {
    if (!j.contains(key)) throw ValidationError(std::string("decision rules: missing '") + key + "'");
  }
  return DecisionRules{j["High"].get<std::string>(), j["Medium"].get<std::string>(),
                       j["Low"].get<std::string>()};
}

enum class PromptMode { correctness, quality };

constexpr std::string_view to_string(PromptMode mode) {
  return mode == PromptMode::correctness ? "correctness" : "quality";
}

// A prompt split into its bands. Frames are attached separately by the
// backend; this is only the text around them.
struct PromptBundle {
  PromptMode mode = PromptMode::correctness;
  std::string context;
  std::string instruction;
  std::string rules;  // quality mode only
  std::string output_schema;

  std::string full_text() const {
    std::string out;
    for (const std::string* band : {&context, &instruction, &rules, &output_schema}) {
      if (band->empty()) continue;
      if (!out.empty()) out += "\n\n";
      out += *band;
    }
    return out;
  }

  friend bool operator==(const PromptBundle&, const PromptBundle&) = default;
};

inline PromptBundle render_correctness_prompt(const std::string& instruction) {
  if (instruction.empty()) throw ValidationError("prompt: empty task instruction");
  PromptBundle p;
  p.mode = PromptMode::correctness;
  p.context =
      "These images are ordered frames from a robot grasping video.\n"
      "You are a precise evaluator of quality of robotic task performance from entire "
      "sequence.";
  p.instruction = "Decide if the " + instruction +
                  " performed by the robotic gripper arm was a Success or Failure in the "
                  "given video.";
  p.output_schema =
      "Output format: Return only valid JSON. No extra text. Use this schema exactly.\n"
      "{\n"
      "  \"status\": \"Successful\" | \"Failure\"\n"
      "}";
  return p;
}

inline PromptBundle render_quality_prompt(const std::string& instruction,
                                          const DecisionRules& rules) {
  if (instruction.empty()) throw ValidationError("prompt: empty task instruction");
  rules.validate();
  PromptBundle p;
  p.mode = PromptMode::quality;
  p.context =
      "These images are ordered frames from a robot grasping video.\n"
      "Considering the entire sequence, you are a precise evaluator of the quality of "
      "robotic task performance from the entire sequence.";
  p.instruction =
      "TASK: " + instruction +
      "\n\n"
      "INSTRUCTION: Examine the GRIPPER and examine how it completes the Task.\n"
      "Decide the overall quality of the task performed using only the decision rules "
      "below:";
  nlohmann::ordered_json rules_json;
  rules_json["High"] = rules.high;
  rules_json["Medium"] = rules.medium;
  rules_json["Low"] = rules.low;
  p.rules = "DECISION RULES in JSON format:\n" + rules_json.dump(2);
  p.output_schema =
      "Output format:\n"
      "Return only valid json. No extra text. Use this schema exactly.\n"
      "{\n"
      "  \"quality\": \"high\" | \"medium\" | \"low\"\n"
      "}";
  return p;
}

// Rough budget check before a request is sent. Frame cost dominates.
inline long estimate_tokens(const std::string& prompt_text, int n_frames,
                            double chars_per_token = 4.0, long tokens_per_frame = 400) {
  if (n_frames < 0) throw ValidationError("estimate_tokens: negative frame count");
  if (chars_per_token <= 0.0) throw ValidationError("estimate_tokens: chars_per_token must be positive");
  if (tokens_per_frame < 0) throw ValidationError("estimate_tokens: negative tokens_per_frame");
  long text_tokens = static_cast<long>(
      std::ceil(static_cast<double>(prompt_text.size()) / chars_per_token));
  return text_tokens + static_cast<long>(n_frames) * tokens_per_frame;
}

}  // namespace robojudge
