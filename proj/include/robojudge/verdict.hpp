#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"
#include "robojudge/distribution.hpp"
#include "robojudge/domain.hpp"
#include "robojudge/util.hpp"

namespace robojudge {

enum class ParseErrorCode {
  empty_text,
  not_json,
  truncated_json,
  not_object,
  missing_key,
  extra_keys,
  wrong_value_type,
  unknown_value,
  quality_failure_value,
  trailing_content,
  double_fence,
  unterminated_fence,
};

constexpr std::string_view parse_error_code_name(ParseErrorCode code) {
  switch (code) {
    case ParseErrorCode::empty_text: return "empty_text";
    case ParseErrorCode::not_json: return "not_json";
    case ParseErrorCode::truncated_json: return "truncated_json";
    case ParseErrorCode::not_object: return "not_object";
    case ParseErrorCode::missing_key: return "missing_key";
    case ParseErrorCode::extra_keys: return "extra_keys";
    case ParseErrorCode::wrong_value_type: return "wrong_value_type";
    case ParseErrorCode::unknown_value: return "unknown_value";
    case ParseErrorCode::quality_failure_value: return "quality_failure_value";
    case ParseErrorCode::trailing_content: return "trailing_content";
    case ParseErrorCode::double_fence: return "double_fence";
    case ParseErrorCode::unterminated_fence: return "unterminated_fence";
  }
  return "unknown";
}

class ParseError : public DecodeError {
 public:
  ParseError(ParseErrorCode code, const std::string& what)
      : DecodeError(std::string(parse_error_code_name(code)) + ": " + what), code_(code) {}
  ParseErrorCode code() const { return code_; }

 private:
  ParseErrorCode code_;
};

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

// Removes at most one ``` wrapper. A second nested fence or text after the
// closing fence is rejected.
inline std::string_view strip_fence(std::string_view text) {
  text = trim(text);
  if (!text.starts_with("```")) return text;
  std::string_view rest = text.substr(3);
  std::size_t eol = rest.find('\n');
  if (eol == std::string_view::npos) {
    throw ParseError(ParseErrorCode::unterminated_fence, "opening fence never closed");
  }
  rest = rest.substr(eol + 1);
  std::size_t close = rest.find("```");
  if (close == std::string_view::npos) {
    throw ParseError(ParseErrorCode::unterminated_fence, "opening fence never closed");
  }
  std::string_view at_close = rest.substr(close + 3);
  // a closing fence cannot carry an info string; ```json here opens a second fence
  if (!at_close.empty() && !std::isspace(static_cast<unsigned char>(at_close.front()))) {
    throw ParseError(ParseErrorCode::double_fence, "nested code fence");
  }
  std::string_view tail = trim(at_close);
  if (!tail.empty()) {
    throw ParseError(ParseErrorCode::trailing_content, "text after closing fence");
  }
  return trim(rest.substr(0, close));
}

// Scans one balanced JSON object/array starting at s[0]; returns one past the
// closing bracket, or npos if the input ends first.
inline std::size_t balanced_end(std::string_view s) {
  char open = s[0];
  char close = open == '{' ? '}' : ']';
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    char c = s[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
    } else if (c == '"') {
      in_string = true;
    } else if (c == open) {
      ++depth;
    } else if (c == close) {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

// Accepts exactly one JSON object with the given sole key holding a string.
inline std::string parse_sole_string_field(std::string_view text, const std::string& key) {
  std::string_view body = strip_fence(text);
  if (body.empty()) throw ParseError(ParseErrorCode::empty_text, "no content");
  if (body.front() != '{' && body.front() != '[') {
    nlohmann::json scalar = nlohmann::json::parse(body, nullptr, false);
    if (scalar.is_discarded()) {
      throw ParseError(ParseErrorCode::not_json, "text is not JSON");
    }
    throw ParseError(ParseErrorCode::not_object, "top-level JSON value is not an object");
  }
  std::size_t end = balanced_end(body);
  if (end == std::string_view::npos) {
    throw ParseError(ParseErrorCode::truncated_json, "input ends inside a JSON value");
  }
  std::string_view tail = trim(body.substr(end));
  if (!tail.empty()) {
    throw ParseError(ParseErrorCode::trailing_content, "text after the JSON value");
  }
  nlohmann::json j = nlohmann::json::parse(body.substr(0, end), nullptr, false);
  if (j.is_discarded()) {
    throw ParseError(ParseErrorCode::not_json, "text is not JSON");
  }
  if (!j.is_object()) {
    throw ParseError(ParseErrorCode::not_object, "top-level JSON value is not an object");
  }
  if (!j.contains(key)) {
    throw ParseError(ParseErrorCode::missing_key, "missing key '" + key + "'");
  }
  if (j.size() != 1) {
    throw ParseError(ParseErrorCode::extra_keys, "object has keys besides '" + key + "'");
  }
  if (!j[key].is_string()) {
    throw ParseError(ParseErrorCode::wrong_value_type, "'" + key + "' is not a string");
  }
  return j[key].get<std::string>();
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

}  // namespace detail

inline CorrectnessLabel parse_correctness(std::string_view text) {
  std::string value = detail::parse_sole_string_field(text, "status");
  if (value == "Successful") return CorrectnessLabel::successful;
  if (value == "Failure") return CorrectnessLabel::failure;
  throw ParseError(ParseErrorCode::unknown_value, "status value '" + value + "'");
}

inline QualityLevel parse_quality(std::string_view text) {
  std::string value = detail::ascii_lower(detail::parse_sole_string_field(text, "quality"));
  if (value == "high") return QualityLevel::high;
  if (value == "medium") return QualityLevel::medium;
  if (value == "low") return QualityLevel::low;
  if (value == "failure") {
    throw ParseError(ParseErrorCode::quality_failure_value,
                     "\"failure\" is not a legal quality output");
  }
  throw ParseError(ParseErrorCode::unknown_value, "quality value '" + value + "'");
}

inline std::string canonical_correctness_text(CorrectnessLabel label) {
  return std::string("{\"status\": \"") + std::string(to_string(label)) + "\"}";
}

inline std::string canonical_quality_text(QualityLevel level) {
  return std::string("{\"quality\": \"") +
         detail::ascii_lower(to_string(level)) + "\"}";
}

struct TokenLogprob {
  std::string token;
  double logprob = 0.0;

  friend bool operator==(const TokenLogprob&, const TokenLogprob&) = default;
};

// token prefix -> class label, matched case-insensitively, longest prefix wins
inline std::vector<std::pair<std::string, std::string>> correctness_token_prefix_map() {
  return {{"Success", "Successful"}, {"Fail", "Failure"}};
}

inline std::vector<std::pair<std::string, std::string>> quality_token_prefix_map() {
  return {{"high", "High"}, {"med", "Medium"}, {"low", "Low"}};
}

// Turns top-k logprobs at the label position into a distribution over class
// labels. Unmatched tokens lose their mass; the rest is renormalized. Without
// logprobs (or when nothing matches) the parsed label gets a point mass and
// an anomaly flag.
inline ClassDistribution extract_class_distribution(
    const std::optional<std::vector<TokenLogprob>>& label_token_logprobs,
    const std::vector<std::string>& labels,
    const std::vector<std::pair<std::string, std::string>>& token_prefix_map,
    const std::string& parsed_label, std::vector<std::string>* anomalies = nullptr) {
  auto label_index = [&](const std::string& label) -> std::size_t {
    auto it = std::find(labels.begin(), labels.end(), label);
    if (it == labels.end()) throw ValidationError("label '" + label + "' not in label set");
    return static_cast<std::size_t>(it - labels.begin());
  };
  std::size_t parsed_index = label_index(parsed_label);
  auto note = [&](const std::string& flag) {
    if (anomalies == nullptr) {
      throw DecodeError("distribution anomaly with no collector: " + flag);
    }
    anomalies->push_back(flag);
  };

  if (!label_token_logprobs.has_value() || label_token_logprobs->empty()) {
    return ClassDistribution::point_mass(labels, parsed_index);
  }

  std::vector<double> mass(labels.size(), 0.0);
  double matched = 0.0;
  for (const TokenLogprob& entry : *label_token_logprobs) {
    if (entry.logprob > 0.0) {
      throw ValidationError("log-probability above 0 for token '" + entry.token + "'");
    }
    std::string token = detail::ascii_lower(entry.token);
    const std::string* best_label = nullptr;
    std::size_t best_len = 0;
    for (const auto& [prefix, label] : token_prefix_map) {
      std::string p = detail::ascii_lower(prefix);
      if (token.starts_with(p) && p.size() > best_len) {
        best_len = p.size();
        best_label = &label;
      }
    }
    if (best_label == nullptr) continue;
    double p = std::exp(entry.logprob);
    mass[label_index(*best_label)] += p;
    matched += p;
  }
  if (matched <= 0.0) {
    note("no_token_matched_label");
    return ClassDistribution::point_mass(labels, parsed_index);
  }
  for (double& m : mass) m /= matched;
  ClassDistribution dist(labels, mass);
  if (dist.argmax() != parsed_index) {
    note("distribution_argmax_disagrees_with_parsed_label");
  }
  return dist;
}

}  // namespace robojudge
