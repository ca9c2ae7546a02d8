#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"
#include "robojudge/frames.hpp"
#include "robojudge/prompt.hpp"
#include "robojudge/util.hpp"
#include "robojudge/verdict.hpp"

namespace robojudge {

struct RetryPolicy {
  int max_attempts = 3;
  double base_backoff_seconds = 0.5;
  double jitter_fraction = 0.1;

  void validate() const {
    if (max_attempts < 1) throw ValidationError("retry policy: max_attempts must be >= 1");
    if (base_backoff_seconds < 0.0 || jitter_fraction < 0.0 || jitter_fraction > 1.0) {
      throw ValidationError("retry policy: bad backoff or jitter");
    }
  }
};

struct BackendSettings {
  std::string backend_id;
  std::string model_name;
  double temperature = 0.0;
  bool request_logprobs = true;
  int top_logprobs = 5;
  int max_in_flight = 4;
  RetryPolicy retry_policy;
  double timeout_seconds = 60.0;
  double price_per_input_token = 4e-6;
  double price_per_output_token = 1.2e-5;
  std::string currency = "USD";
  int requests_per_minute = 0;  // 0 = unlimited
  std::optional<double> max_spend_per_run;
  // http specifics; unused by the mock
  std::string api_base_url;
  std::string api_path = "/v1/chat/completions";
  std::string api_key_env;

  void validate() const {
    if (backend_id.empty()) throw ValidationError("backend settings: empty backend_id");
    if (model_name.empty()) throw ValidationError("backend settings: empty model_name");
    if (temperature < 0.0) throw ValidationError("backend settings: negative temperature");
    if (request_logprobs && top_logprobs < 1) {
      throw ValidationError("backend settings: top_logprobs must be >= 1 when logprobs are requested");
    }
    if (max_in_flight < 1) throw ValidationError("backend settings: max_in_flight must be >= 1");
    if (timeout_seconds <= 0.0) throw ValidationError("backend settings: timeout must be positive");
    if (price_per_input_token < 0.0 || price_per_output_token < 0.0) {
      throw ValidationError("backend settings: negative token price");
    }
    if (requests_per_minute < 0) {
      throw ValidationError("backend settings: negative requests_per_minute");
    }
    if (max_spend_per_run.has_value() && *max_spend_per_run < 0.0) {
      throw ValidationError("backend settings: negative max_spend_per_run");
    }
    retry_policy.validate();
  }
};

struct RawResponse {
  std::string text;
  std::optional<std::vector<TokenLogprob>> label_token_logprobs;
  long input_tokens = 0;
  long output_tokens = 0;
  double latency_seconds = 0.0;

  void validate() const {
    if (input_tokens < 0 || output_tokens < 0) {
      throw ValidationError("raw response: negative token count");
    }
    if (label_token_logprobs.has_value()) {
      for (const TokenLogprob& t : *label_token_logprobs) {
        if (t.logprob > 0.0) {
          throw ValidationError("raw response: log-probability above 0");
        }
      }
    }
  }

  friend bool operator==(const RawResponse&, const RawResponse&) = default;
};

inline nlohmann::json to_json(const RawResponse& raw) {
  nlohmann::json logprobs;
  if (raw.label_token_logprobs.has_value()) {
    logprobs = nlohmann::json::array();
    for (const TokenLogprob& t : *raw.label_token_logprobs) {
      logprobs.push_back({{"token", t.token}, {"logprob", t.logprob}});
    }
  } else {
    logprobs = nullptr;
  }
  return nlohmann::json{{"schema", "raw_response.v1"},
                        {"text", raw.text},
                        {"label_token_logprobs", std::move(logprobs)},
                        {"input_tokens", raw.input_tokens},
                        {"output_tokens", raw.output_tokens},
                        {"latency_seconds", raw.latency_seconds}};
}

inline RawResponse raw_response_from_json(const nlohmann::json& j) {
  RawResponse raw;
  raw.text = j.at("text").get<std::string>();
  if (j.contains("label_token_logprobs") && !j["label_token_logprobs"].is_null()) {
    std::vector<TokenLogprob> entries;
    for (const auto& t : j["label_token_logprobs"]) {
      entries.push_back({t.at("token").get<std::string>(), t.at("logprob").get<double>()});
    }
    raw.label_token_logprobs = std::move(entries);
  }
  raw.input_tokens = j.at("input_tokens").get<long>();
  raw.output_tokens = j.at("output_tokens").get<long>();
  raw.latency_seconds = j.at("latency_seconds").get<double>();
  raw.validate();
  return raw;
}

inline double response_cost(const BackendSettings& settings, const RawResponse& raw) {
  return static_cast<double>(raw.input_tokens) * settings.price_per_input_token +
         static_cast<double>(raw.output_tokens) * settings.price_per_output_token;
}

// Digest of everything that determines a response. nlohmann objects keep keys
// sorted, so insertion order cannot leak into the digest.
inline std::string cache_key(const BackendSettings& settings, const PromptBundle& bundle,
                             const FrameSequence& frames) {
  nlohmann::json frame_digests = nlohmann::json::array();
  for (const EncodedFrame& f : frames.frames) {
    frame_digests.push_back(sha256_hex(std::span<const std::uint8_t>(f.image_bytes)));
  }
  nlohmann::json key{{"model_name", settings.model_name},
                     {"temperature", settings.temperature},
                     {"mode", std::string(to_string(bundle.mode))},
                     {"prompt", bundle.full_text()},
                     {"frames", std::move(frame_digests)}};
  return sha256_hex(key.dump());
}

class Backend {
 public:
  virtual ~Backend() = default;
  virtual const BackendSettings& settings() const = 0;
  virtual RawResponse assess(const PromptBundle& bundle, const FrameSequence& frames) = 0;
};

// Deterministic offline backend. Scripts are keyed by "<video_id>/<mode>"
// (falling back to plain "<video_id>"); the r-th request for a key takes the
// r-th scripted response, sticking on the last one when the script is shorter.
class MockBackend : public Backend {
 public:
  struct RecordedRequest {
    std::string key;
    std::string digest;
    PromptMode mode = PromptMode::correctness;
    std::string prompt_text;
    std::size_t n_frames = 0;
  };

  explicit MockBackend(BackendSettings settings) : settings_(std::move(settings)) {
    settings_.validate();
  }

  const BackendSettings& settings() const override { return settings_; }

  void script(const std::string& key, RawResponse response) {
    response.validate();
    std::lock_guard lock(mutex_);
    script_[key].push_back(std::move(response));
  }

  void set_default_response(RawResponse response) {
    response.validate();
    std::lock_guard lock(mutex_);
    default_response_ = std::move(response);
  }

  // sleep up to this long per request, scrambling completion order
  void set_random_delay_ms(int max_ms) {
    std::lock_guard lock(mutex_);
    random_delay_ms_ = max_ms;
  }

  RawResponse assess(const PromptBundle& bundle, const FrameSequence& frames) override {
    std::string keyed = frames.source_video_id + "/" + std::string(to_string(bundle.mode));
    int delay_ms = 0;
    RawResponse response;
    {
      std::lock_guard lock(mutex_);
      requests_.push_back({keyed, cache_key(settings_, bundle, frames), bundle.mode,
                           bundle.full_text(), frames.frames.size()});
      const std::vector<RawResponse>* entries = nullptr;
      std::string matched = keyed;
      if (auto it = script_.find(keyed); it != script_.end()) {
        entries = &it->second;
      } else if (auto it2 = script_.find(frames.source_video_id); it2 != script_.end()) {
        entries = &it2->second;
        matched = frames.source_video_id;
      }
      if (entries != nullptr) {
        std::size_t call = call_counts_[matched]++;
        response = (*entries)[std::min(call, entries->size() - 1)];
      } else if (default_response_.has_value()) {
        response = *default_response_;
      } else {
        throw BackendError(BackendError::Kind::script,
                           "mock backend: no script for '" + keyed + "'");
      }
      if (random_delay_ms_ > 0) {
        delay_ms = std::uniform_int_distribution<int>(0, random_delay_ms_)(rng_);
      }
    }
    if (delay_ms > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
    }
    return response;
  }

  std::vector<RecordedRequest> recorded_requests() const {
    std::lock_guard lock(mutex_);
    return requests_;
  }

  std::size_t request_count() const {
    std::lock_guard lock(mutex_);
    return requests_.size();
  }

 private:
  BackendSettings settings_;
  mutable std::mutex mutex_;
  std::map<std::string, std::vector<RawResponse>> script_;
  std::map<std::string, std::size_t> call_counts_;
  std::optional<RawResponse> default_response_;
  std::vector<RecordedRequest> requests_;
  int random_delay_ms_ = 0;
  std::mt19937 rng_{std::random_device{}()};
};

// One file per digest under root/scope/. Scope partitions runs so that
// repetition r only ever sees its own responses.
class ResponseStore {
 public:
  ResponseStore(std::filesystem::path root, std::string scope)
      : dir_(std::move(root) / std::move(scope)) {}

  const std::filesystem::path& dir() const { return dir_; }

  std::optional<RawResponse> get(const std::string& digest) const {
    std::filesystem::path file = dir_ / (digest + ".json");
    if (!std::filesystem::exists(file)) return std::nullopt;
    nlohmann::json j = nlohmann::json::parse(read_file_text(file), nullptr, false);
    if (j.is_discarded()) throw ValidationError("corrupt cache file: " + file.string());
    return raw_response_from_json(j);
  }

  void put(const std::string& digest, const RawResponse& raw) const {
    std::lock_guard lock(write_mutex_);
    write_file_atomic(dir_ / (digest + ".json"), to_json(raw).dump(2) + "\n");
  }

 private:
  std::filesystem::path dir_;
  mutable std::mutex write_mutex_;
};

// Shared across the threads of one run: counts live calls and cache hits,
// accumulates fresh spend.
struct BackendTelemetry {
  long backend_calls = 0;
  long cache_hits = 0;
  long live_input_tokens = 0;
  long live_output_tokens = 0;
  double live_spend = 0.0;
};

class BudgetGuard {
 public:
  explicit BudgetGuard(std::optional<double> ceiling) : ceiling_(ceiling) {}

  void check() const {
    std::lock_guard lock(mutex_);
    if (ceiling_.has_value() && spent_ >= *ceiling_) {
      throw BudgetExceeded("spend " + std::to_string(spent_) + " reached the ceiling " +
                           std::to_string(*ceiling_));
    }
  }

  void add(double cost) {
    std::lock_guard lock(mutex_);
    spent_ += cost;
  }

  double spent() const {
    std::lock_guard lock(mutex_);
    return spent_;
  }

 private:
  std::optional<double> ceiling_;
  mutable std::mutex mutex_;
  double spent_ = 0.0;
};

// Token bucket. acquire() blocks until a request slot is available.
class RateLimiter {
 public:
  explicit RateLimiter(int requests_per_minute)
      : rate_per_second_(requests_per_minute / 60.0),
        tokens_(requests_per_minute > 0 ? 1.0 : 0.0),
        last_refill_(std::chrono::steady_clock::now()),
        unlimited_(requests_per_minute == 0) {}

  void acquire() {
    if (unlimited_) return;
    std::unique_lock lock(mutex_);
    for (;;) {
      auto now = std::chrono::steady_clock::now();
      double elapsed = std::chrono::duration<double>(now - last_refill_).count();
      last_refill_ = now;
      tokens_ = std::min(burst_, tokens_ + elapsed * rate_per_second_);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      double wait = (1.0 - tokens_) / rate_per_second_;
      lock.unlock();
      std::this_thread::sleep_for(std::chrono::duration<double>(wait));
      lock.lock();
    }
  }

 private:
  double rate_per_second_;
  double burst_ = 2.0;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;
  bool unlimited_;
  std::mutex mutex_;
};

// Bounds concurrent inner calls to max_in_flight.
class InFlightGate {
 public:
  explicit InFlightGate(int limit) : limit_(limit) {}

  void enter() {
    std::unique_lock lock(mutex_);
    cv_.wait(lock, [&] { return in_flight_ < limit_; });
    ++in_flight_;
  }

  void leave() {
    {
      std::lock_guard lock(mutex_);
      --in_flight_;
    }
    cv_.notify_one();
  }

 private:
  int limit_;
  int in_flight_ = 0;
  std::mutex mutex_;
  std::condition_variable cv_;
};

// Cache + budget + throttling around a live backend. A hit costs nothing and
// touches no counters except cache_hits.
class CachingBackend : public Backend {
 public:
  CachingBackend(Backend& inner, const ResponseStore& store)
      : inner_(inner),
        store_(store),
        budget_(inner.settings().max_spend_per_run),
        limiter_(inner.settings().requests_per_minute),
        gate_(inner.settings().max_in_flight) {}

  const BackendSettings& settings() const override { return inner_.settings(); }

  RawResponse assess(const PromptBundle& bundle, const FrameSequence& frames) override {
    std::string digest = cache_key(inner_.settings(), bundle, frames);
    if (std::optional<RawResponse> hit = store_.get(digest)) {
      std::lock_guard lock(mutex_);
      ++telemetry_.cache_hits;
      return *hit;
    }
    budget_.check();
    limiter_.acquire();
    gate_.enter();
    RawResponse response;
    try {
      response = inner_.assess(bundle, frames);
    } catch (...) {
      gate_.leave();
      throw;
    }
    gate_.leave();
    response.validate();
    double cost = response_cost(inner_.settings(), response);
    budget_.add(cost);
    store_.put(digest, response);
    {
      std::lock_guard lock(mutex_);
      ++telemetry_.backend_calls;
      telemetry_.live_input_tokens += response.input_tokens;
      telemetry_.live_output_tokens += response.output_tokens;
      telemetry_.live_spend += cost;
    }
    return response;
  }

  BackendTelemetry telemetry() const {
    std::lock_guard lock(mutex_);
    return telemetry_;
  }

  double spent() const { return budget_.spent(); }

 private:
  Backend& inner_;
  const ResponseStore& store_;
  BudgetGuard budget_;
  RateLimiter limiter_;
  InFlightGate gate_;
  mutable std::mutex mutex_;
  BackendTelemetry telemetry_;
};

// Replay never talks to a backend: a cache miss is a hard error.
class ReplayBackend : public Backend {
 public:
  ReplayBackend(BackendSettings settings, const ResponseStore& store)
      : settings_(std::move(settings)), store_(store) {
    settings_.validate();
  }

  const BackendSettings& settings() const override { return settings_; }

  RawResponse assess(const PromptBundle& bundle, const FrameSequence& frames) override {
    std::string digest = cache_key(settings_, bundle, frames);
    std::optional<RawResponse> hit = store_.get(digest);
    if (!hit.has_value()) {
      throw BackendError(BackendError::Kind::fatal,
                         "replay: no cached response for digest " + digest);
    }
    {
      std::lock_guard lock(mutex_);
      ++telemetry_.cache_hits;
    }
    return *hit;
  }

  BackendTelemetry telemetry() const {
    std::lock_guard lock(mutex_);
    return telemetry_;
  }

 private:
  BackendSettings settings_;
  const ResponseStore& store_;
  mutable std::mutex mutex_;
  BackendTelemetry telemetry_;
};

}  // namespace robojudge
