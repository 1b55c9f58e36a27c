#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <string>
#include <variant>
#include <vector>

#include "lteval/util.hpp"

namespace lteval {

/// Chat-completions endpoint, e.g. "https://api.openai.com/v1/chat/completions".
struct LiveBackend {
  std::string endpoint;
  std::string model_id;
  std::string api_key_env = "OPENAI_API_KEY";
};

struct MockBackend {
  std::filesystem::path script_path;
};

struct JudgeConfig {
  std::variant<LiveBackend, MockBackend> backend = MockBackend{};
  /// nullopt means "let the backend use its default" (candidate generation).
  std::optional<double> temperature = 0.0;
  int max_retries = 3;
  std::chrono::milliseconds retry_backoff{1000};  // doubled after each failure
  std::chrono::seconds timeout{120};
  std::filesystem::path cache_dir;  // empty disables caching
  std::size_t concurrency_limit = 1;
};

struct JudgeRequest {
  std::string system_text;
  std::string user_text;
  std::optional<double> temperature;  // overrides JudgeConfig::temperature
};

struct JudgeResponse {
  std::string text;
  bool cached = false;
  std::string backend_id;
  std::chrono::milliseconds latency{0};
};

/// Request after defaults are applied. This is what is hashed and stored.
struct ResolvedRequest {
  std::string model_id;
  std::optional<double> temperature;
  std::string system_text;
  std::string user_text;

  json to_json() const;
  /// SHA-256 over the canonical JSON of all four fields.
  std::string cache_key() const;
};

/// Thrown by backends for failures worth retrying (connection errors,
/// HTTP 429 and 5xx).
class RetryableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string model_id() const = 0;
  virtual std::string backend_id() const = 0;
  virtual std::string complete(const ResolvedRequest& request) = 0;
};

/// Scripted backend. Script JSON:
///
///   {
///     "model_id": "mock-judge",
///     "entries": {"<cache key>": "response text", ...},
///     "rules": [
///       {"contains": ["Criterion: Honorifics"], "not_contains": ["“"],
///        "regex": "...", "response": "Score: 5"},
///       ...
///     ],
///     "fallback": "optional text"
///   }
///
/// Exact entries win, then the first matching rule, then the fallback.
/// Rules match against system_text + "\n" + user_text. A rule's response may
/// be an array of strings; one is picked by hashing the request, so the
/// backend stays a pure function of its input.
class MockScriptBackend final : public Backend {
 public:
  explicit MockScriptBackend(const json& script);
  static std::unique_ptr<MockScriptBackend> from_file(const std::filesystem::path& path);

  std::string model_id() const override { return model_id_; }
  std::string backend_id() const override { return "mock:" + model_id_; }
  std::string complete(const ResolvedRequest& request) override;

 private:
  struct Rule {
    std::vector<std::string> contains;
    std::vector<std::string> not_contains;
    std::optional<std::regex> pattern;
    std::vector<std::string> responses;
  };
  std::string model_id_;
  std::map<std::string, std::string> entries_;
  std::vector<Rule> rules_;
  std::optional<std::string> fallback_;
};

/// OpenAI-style chat-completions client over HTTP(S).
class HttpChatBackend final : public Backend {
 public:
  HttpChatBackend(LiveBackend config, std::chrono::seconds timeout);

  std::string model_id() const override { return config_.model_id; }
  std::string backend_id() const override { return "live:" + config_.model_id; }
  std::string complete(const ResolvedRequest& request) override;

  static json build_body(const ResolvedRequest& request);
  /// Extracts choices[0].message.content.
  static std::string extract_text(const json& body);

 private:
  LiveBackend config_;
  std::chrono::seconds timeout_;
  std::string base_url_;
  std::string path_;
  std::string api_key_;
};

/// One file per key: <cache_dir>/<key>.json holding {key, request, response}.
class ResponseCache {
 public:
  explicit ResponseCache(std::filesystem::path dir);

  std::optional<std::string> get(const std::string& key) const;
  void put(const std::string& key, const ResolvedRequest& request, const std::string& text,
           const std::string& backend_id) const;
  std::filesystem::path path_for(const std::string& key) const;

 private:
  std::filesystem::path dir_;
};

struct JudgeStats {
  std::size_t backend_calls = 0;
  std::size_t cache_hits = 0;
};

/// Thread-safe completion front end: cache, retries, concurrency limit.
class Judge {
 public:
  explicit Judge(JudgeConfig config);
  Judge(JudgeConfig config, std::unique_ptr<Backend> backend);

  JudgeResponse complete(const JudgeRequest& request);
  ResolvedRequest resolve(const JudgeRequest& request) const;

  const JudgeConfig& config() const { return config_; }
  std::string model_id() const { return backend_->model_id(); }
  JudgeStats stats() const { return {backend_calls_.load(), cache_hits_.load()}; }

 private:
  std::string call_with_retries(const ResolvedRequest& request);

  JudgeConfig config_;
  std::unique_ptr<Backend> backend_;
  std::optional<ResponseCache> cache_;
  std::atomic<std::size_t> backend_calls_{0};
  std::atomic<std::size_t> cache_hits_{0};

  std::mutex slot_mutex_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
};

/// Convenience wrapper matching the free-function form.
JudgeResponse complete(const JudgeRequest& request, Judge& judge);

}  // namespace lteval
