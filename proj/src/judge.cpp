#include "lteval/judge.hpp"

#include <cstdlib>
#include <thread>

#include <httplib.h>

#include "lteval/error.hpp"

namespace lteval {

// --- ResolvedRequest ---------------------------------------------------------

json ResolvedRequest::to_json() const {
  return json{{"model", model_id},
              {"temperature", temperature ? json(*temperature) : json(nullptr)},
              {"system", system_text},
              {"user", user_text}};
}

std::string ResolvedRequest::cache_key() const { return sha256_hex(to_json().dump()); }

// --- Mock backend --------------------------------------------------------------

namespace {

std::vector<std::string> string_list(const json& j, const char* field) {
  std::vector<std::string> out;
  auto it = j.find(field);
  if (it == j.end() || it->is_null()) return out;
  if (it->is_string()) {
    out.push_back(it->get<std::string>());
  } else if (it->is_array()) {
    for (const auto& s : *it) out.push_back(s.get<std::string>());
  } else {
    throw Error(ErrorCode::InvalidConfig, std::string("mock rule field '") + field + "' must be string or list");
  }
  return out;
}

}  // namespace

MockScriptBackend::MockScriptBackend(const json& script) {
  if (!script.is_object()) throw Error(ErrorCode::InvalidConfig, "mock script must be a JSON object");
  model_id_ = script.value("model_id", "mock-judge");
  if (auto e = script.find("entries"); e != script.end()) {
    for (auto it = e->begin(); it != e->end(); ++it) entries_[it.key()] = it.value().get<std::string>();
  }
  if (auto r = script.find("rules"); r != script.end()) {
    for (const auto& rj : *r) {
      Rule rule;
      rule.contains = string_list(rj, "contains");
      rule.not_contains = string_list(rj, "not_contains");
      if (auto p = rj.find("regex"); p != rj.end()) {
        try {
          rule.pattern.emplace(p->get<std::string>(), std::regex::ECMAScript);
        } catch (const std::regex_error& ex) {
          throw Error(ErrorCode::InvalidConfig, std::string("bad mock regex: ") + ex.what());
        }
      }
      rule.responses = string_list(rj, "response");
      if (rule.responses.empty()) throw Error(ErrorCode::InvalidConfig, "mock rule without response");
      rules_.push_back(std::move(rule));
    }
  }
  if (auto f = script.find("fallback"); f != script.end() && f->is_string()) fallback_ = f->get<std::string>();
}

std::unique_ptr<MockScriptBackend> MockScriptBackend::from_file(const std::filesystem::path& path) {
  json script;
  try {
    script = json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, "mock script " + path.string() + ": " + e.what());
  }
  return std::make_unique<MockScriptBackend>(script);
}

std::string MockScriptBackend::complete(const ResolvedRequest& request) {
  const auto key = request.cache_key();
  if (auto it = entries_.find(key); it != entries_.end()) return it->second;

  const std::string haystack = request.system_text + "\n" + request.user_text;
  for (const auto& rule : rules_) {
    bool ok = true;
    for (const auto& c : rule.contains) ok = ok && haystack.find(c) != std::string::npos;
    for (const auto& c : rule.not_contains) ok = ok && haystack.find(c) == std::string::npos;
    if (ok && rule.pattern) ok = std::regex_search(haystack, *rule.pattern);
    if (!ok) continue;
    if (rule.responses.size() == 1) return rule.responses.front();
    auto pick = std::stoull(key.substr(0, 12), nullptr, 16) % rule.responses.size();
    return rule.responses[pick];
  }
  if (fallback_) return *fallback_;
  throw Error(ErrorCode::MockScriptMiss, "mock script has no entry or rule for request " + key.substr(0, 16));
}

// --- HTTP backend --------------------------------------------------------------

HttpChatBackend::HttpChatBackend(LiveBackend config, std::chrono::seconds timeout)
    : config_(std::move(config)), timeout_(timeout) {
  const auto& url = config_.endpoint;
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::InvalidConfig, "endpoint must be an absolute URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  base_url_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/v1/chat/completions" : url.substr(path_start);
  if (config_.model_id.empty()) throw Error(ErrorCode::InvalidConfig, "live backend needs a model id");
  if (!config_.api_key_env.empty()) {
    if (const char* key = std::getenv(config_.api_key_env.c_str())) api_key_ = key;
  }
}

json HttpChatBackend::build_body(const ResolvedRequest& request) {
  json messages = json::array();
  if (!request.system_text.empty()) {
    messages.push_back({{"role", "system"}, {"content", request.system_text}});
  }
  messages.push_back({{"role", "user"}, {"content", request.user_text}});
  json body{{"model", request.model_id}, {"messages", std::move(messages)}};
  if (request.temperature) body["temperature"] = *request.temperature;
  return body;
}

std::string HttpChatBackend::extract_text(const json& body) {
  try {
    const auto& content = body.at("choices").at(0).at("message").at("content");
    return content.is_null() ? std::string() : content.get<std::string>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Transport, std::string("unexpected completion body: ") + e.what());
  }
}

std::string HttpChatBackend::complete(const ResolvedRequest& request) {
  httplib::Client client(base_url_);
  const auto secs = static_cast<time_t>(timeout_.count());
  client.set_connection_timeout(secs, 0);
  client.set_read_timeout(secs, 0);
  client.set_write_timeout(secs, 0);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

  auto result = client.Post(path_, headers, build_body(request).dump(), "application/json");
  if (!result) {
    throw RetryableError("HTTP transport error: " + httplib::to_string(result.error()));
  }
  const int status = result->status;
  if (status == 429 || status >= 500) {
    throw RetryableError("HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
  }
  if (status < 200 || status >= 300) {
    throw Error(ErrorCode::Transport, "HTTP " + std::to_string(status) + ": " + result->body.substr(0, 200));
  }
  json body;
  try {
    body = json::parse(result->body);
  } catch (const json::parse_error& e) {
    throw RetryableError(std::string("malformed completion JSON: ") + e.what());
  }
  return extract_text(body);
}

// --- Cache -------------------------------------------------------------------------

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path ResponseCache::path_for(const std::string& key) const {
  return dir_ / (key + ".json");
}

std::optional<std::string> ResponseCache::get(const std::string& key) const {
  auto path = path_for(key);
  if (!std::filesystem::exists(path)) return std::nullopt;
  try {
    auto entry = json::parse(read_file(path));
    if (entry.value("key", "") != key) return std::nullopt;
    return entry.at("response").at("text").get<std::string>();
  } catch (const std::exception& e) {
    warn("ignoring unreadable cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void ResponseCache::put(const std::string& key, const ResolvedRequest& request, const std::string& text,
                        const std::string& backend_id) const {
  json entry{{"key", key},
             {"request", request.to_json()},
             {"response", {{"text", text}, {"backend_id", backend_id}}}};
  atomic_write_file(path_for(key), entry.dump(2) + "\n");
}

// --- Judge -------------------------------------------------------------------------

namespace {

std::unique_ptr<Backend> make_backend(const JudgeConfig& config) {
  if (const auto* live = std::get_if<LiveBackend>(&config.backend)) {
    return std::make_unique<HttpChatBackend>(*live, config.timeout);
  }
  const auto& mock = std::get<MockBackend>(config.backend);
  if (mock.script_path.empty()) throw Error(ErrorCode::InvalidConfig, "mock backend needs a script path");
  return MockScriptBackend::from_file(mock.script_path);
}

}  // namespace

Judge::Judge(JudgeConfig config) : Judge(config, make_backend(config)) {}

Judge::Judge(JudgeConfig config, std::unique_ptr<Backend> backend)
    : config_(std::move(config)), backend_(std::move(backend)) {
  if (config_.concurrency_limit < 1) throw Error(ErrorCode::InvalidConfig, "concurrency_limit must be >= 1");
  if (config_.max_retries < 0) throw Error(ErrorCode::InvalidConfig, "max_retries must be >= 0");
  if (config_.temperature && *config_.temperature < 0.0) {
    throw Error(ErrorCode::InvalidConfig, "temperature must be >= 0");
  }
  if (!config_.cache_dir.empty()) cache_.emplace(config_.cache_dir);
}

ResolvedRequest Judge::resolve(const JudgeRequest& request) const {
  return {backend_->model_id(), request.temperature ? request.temperature : config_.temperature,
          request.system_text, request.user_text};
}

std::string Judge::call_with_retries(const ResolvedRequest& request) {
  {
    std::unique_lock lock(slot_mutex_);
    slot_cv_.wait(lock, [&] { return in_flight_ < config_.concurrency_limit; });
    ++in_flight_;
  }
  struct Release {
    Judge* self;
    ~Release() {
      {
        std::lock_guard lock(self->slot_mutex_);
        --self->in_flight_;
      }
      self->slot_cv_.notify_one();
    }
  } release{this};

  auto delay = config_.retry_backoff;
  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(delay);
      delay *= 2;
    }
    backend_calls_.fetch_add(1);
    try {
      return backend_->complete(request);
    } catch (const RetryableError& e) {
      last_error = e.what();
    }
  }
  throw Error(ErrorCode::TransportExhausted, "giving up after " + std::to_string(config_.max_retries + 1) +
                                                 " attempts: " + last_error);
}

JudgeResponse Judge::complete(const JudgeRequest& request) {
  const auto start = std::chrono::steady_clock::now();
  const auto resolved = resolve(request);
  const auto key = resolved.cache_key();
  JudgeResponse response;
  response.backend_id = backend_->backend_id();

  if (cache_) {
    if (auto hit = cache_->get(key)) {
      cache_hits_.fetch_add(1);
      response.text = std::move(*hit);
      response.cached = true;
      return response;
    }
  }
  response.text = call_with_retries(resolved);
  if (trim(response.text).empty()) {
    throw Error(ErrorCode::EmptyCompletion, "backend returned an empty completion");
  }
  if (cache_) cache_->put(key, resolved, response.text, response.backend_id);
  response.latency =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - start);
  return response;
}

JudgeResponse complete(const JudgeRequest& request, Judge& judge) { return judge.complete(request); }

}  // namespace lteval
