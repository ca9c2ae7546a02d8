#pragma once

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdlib>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "robojudge/backend.hpp"

namespace robojudge {

namespace detail {

// BPE tokens often carry leading quotes, spaces or marker bytes; drop
// everything before the first ASCII letter or digit.
inline std::string normalize_token(std::string_view token) {
  std::size_t start = 0;
  while (start < token.size() &&
         !std::isalnum(static_cast<unsigned char>(token[start]))) {
    ++start;
  }
  return std::string(token.substr(start));
}

inline bool token_is_decisive(const std::string& normalized, PromptMode mode) {
  std::string lowered = ascii_lower(normalized);
  if (mode == PromptMode::correctness) {
    return lowered.starts_with("success") || lowered.starts_with("fail");
  }
  return lowered.starts_with("high") || lowered.starts_with("med") ||
         lowered.starts_with("low");
}

}  // namespace detail

// Chat-completions-style JSON-over-HTTP client. Frames travel as base64 data
// URLs interleaved after the prompt text.
class HttpBackend : public Backend {
 public:
  explicit HttpBackend(BackendSettings settings) : settings_(std::move(settings)) {
    settings_.validate();
    if (settings_.api_base_url.empty()) {
      throw ValidationError("http backend: api_base_url not configured");
    }
  }

  const BackendSettings& settings() const override { return settings_; }

  RawResponse assess(const PromptBundle& bundle, const FrameSequence& frames) override {
    std::string body = build_request_body(bundle, frames);
    std::string auth_header;
    if (!settings_.api_key_env.empty()) {
      const char* key = std::getenv(settings_.api_key_env.c_str());
      if (key == nullptr || *key == '\0') {
        throw BackendError(BackendError::Kind::auth,
                           "credential environment variable " + settings_.api_key_env +
                               " is not set");
      }
      auth_header = std::string("Bearer ") + key;
    }

    auto started = std::chrono::steady_clock::now();
    BackendError::Kind last_kind = BackendError::Kind::transient;
    std::string last_detail;
    for (int attempt = 1; attempt <= settings_.retry_policy.max_attempts; ++attempt) {
      httplib::Client client(settings_.api_base_url);
      auto timeout = std::chrono::duration<double>(settings_.timeout_seconds);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      httplib::Headers headers;
      if (!auth_header.empty()) headers.emplace("Authorization", auth_header);

      httplib::Result result = client.Post(settings_.api_path, headers, body, "application/json");
      if (!result) {
        last_kind = result.error() == httplib::Error::ConnectionTimeout ||
                            result.error() == httplib::Error::Read
                        ? BackendError::Kind::timeout
                        : BackendError::Kind::transient;
        last_detail = httplib::to_string(result.error());
      } else if (result->status == 200) {
        RawResponse raw = parse_response_body(result->body, bundle.mode);
        raw.latency_seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
        raw.validate();
        return raw;
      } else if (result->status == 401 || result->status == 403) {
        throw BackendError(BackendError::Kind::auth,
                           "authentication rejected (HTTP " +
                               std::to_string(result->status) + ")");
      } else if (result->status == 408 || result->status == 429 || result->status >= 500) {
        last_kind = BackendError::Kind::transient;
        last_detail = "HTTP " + std::to_string(result->status);
      } else {
        throw BackendError(BackendError::Kind::fatal,
                           "backend rejected the request (HTTP " +
                               std::to_string(result->status) + "): " + result->body);
      }
      if (attempt < settings_.retry_policy.max_attempts) {
        std::this_thread::sleep_for(std::chrono::duration<double>(backoff_seconds(attempt)));
      }
    }
    throw BackendError(last_kind, "retries exhausted after " +
                                      std::to_string(settings_.retry_policy.max_attempts) +
                                      " attempts: " + last_detail);
  }

 private:
  double backoff_seconds(int attempt) {
    double base = settings_.retry_policy.base_backoff_seconds *
                  static_cast<double>(1 << (attempt - 1));
    if (settings_.retry_policy.jitter_fraction == 0.0) return base;
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    double jitter;
    {
      std::lock_guard lock(rng_mutex_);
      jitter = unit(rng_) * settings_.retry_policy.jitter_fraction;
    }
    return base * (1.0 + jitter);
  }

  std::string build_request_body(const PromptBundle& bundle, const FrameSequence& frames) const {
    nlohmann::json content = nlohmann::json::array();
    content.push_back({{"type", "text"}, {"text", bundle.full_text()}});
    for (const EncodedFrame& frame : frames.frames) {
      content.push_back(
          {{"type", "image_url"},
           {"image_url",
            {{"url", "data:" + frame.media_type + ";base64," +
                         base64_encode(frame.image_bytes)}}}});
    }
    nlohmann::json request{
        {"model", settings_.model_name},
        {"temperature", settings_.temperature},
        {"messages", nlohmann::json::array({nlohmann::json{
                         {"role", "user"}, {"content", std::move(content)}}})}};
    if (settings_.request_logprobs) {
      request["logprobs"] = true;
      request["top_logprobs"] = settings_.top_logprobs;
    }
    return request.dump();
  }

  static RawResponse parse_response_body(const std::string& body, PromptMode mode) {
    nlohmann::json j = nlohmann::json::parse(body, nullptr, false);
    if (j.is_discarded()) {
      throw BackendError(BackendError::Kind::fatal, "backend returned non-JSON body");
    }
    RawResponse raw;
    try {
      const nlohmann::json& choice = j.at("choices").at(0);
      raw.text = choice.at("message").at("content").get<std::string>();
      if (j.contains("usage")) {
        raw.input_tokens = j["usage"].value("prompt_tokens", 0L);
        raw.output_tokens = j["usage"].value("completion_tokens", 0L);
      }
      if (choice.contains("logprobs") && choice["logprobs"].is_object() &&
          choice["logprobs"].contains("content")) {
        for (const auto& position : choice["logprobs"]["content"]) {
          std::string normalized =
              detail::normalize_token(position.at("token").get<std::string>());
          if (!detail::token_is_decisive(normalized, mode)) continue;
          std::vector<TokenLogprob> entries;
          if (position.contains("top_logprobs")) {
            for (const auto& alt : position["top_logprobs"]) {
              entries.push_back(
                  {detail::normalize_token(alt.at("token").get<std::string>()),
                   std::min(0.0, alt.at("logprob").get<double>())});
            }
          }
          if (entries.empty()) {
            entries.push_back({normalized, std::min(0.0, position.at("logprob").get<double>())});
          }
          raw.label_token_logprobs = std::move(entries);
          break;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw BackendError(BackendError::Kind::fatal,
                         std::string("malformed backend response: ") + e.what());
    }
    return raw;
  }

  BackendSettings settings_;
  std::mutex rng_mutex_;
  std::mt19937 rng_{std::random_device{}()};
};

}  // namespace robojudge
