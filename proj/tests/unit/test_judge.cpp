#include <gtest/gtest.h>

#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "lteval/error.hpp"
#include "lteval/judge.hpp"
#include "support.hpp"

using namespace lteval;
using namespace std::chrono_literals;

namespace {

/// Backend that fails `failures` times with a retryable error, then echoes.
class FlakyBackend : public Backend {
 public:
  FlakyBackend(int failures, std::string reply) : failures_(failures), reply_(std::move(reply)) {}
  std::string model_id() const override { return "flaky"; }
  std::string backend_id() const override { return "test:flaky"; }
  std::string complete(const ResolvedRequest& r) override {
    ++calls;
    last = r;
    if (failures_-- > 0) throw RetryableError("try again");
    return reply_;
  }
  std::atomic<int> calls{0};
  ResolvedRequest last;

 private:
  std::atomic<int> failures_;
  std::string reply_;
};

/// Records the peak number of concurrent calls.
class SlowBackend : public Backend {
 public:
  std::string model_id() const override { return "slow"; }
  std::string backend_id() const override { return "test:slow"; }
  std::string complete(const ResolvedRequest& r) override {
    const int now = ++active;
    int seen = peak.load();
    while (now > seen && !peak.compare_exchange_weak(seen, now)) {
    }
    std::this_thread::sleep_for(20ms);
    --active;
    return "ok " + r.user_text;
  }
  std::atomic<int> active{0};
  std::atomic<int> peak{0};
};

JudgeConfig quick_config() {
  JudgeConfig c;
  c.retry_backoff = 1ms;
  return c;
}

json script() {
  return json::parse(R"({
    "model_id": "scripted",
    "rules": [
      {"contains": ["Criterion: Honorifics"], "not_contains": ["“"], "response": "Score: 5"},
      {"contains": ["Criterion: Honorifics"], "response": ["Score: 2", "Score: 3"]},
      {"regex": "^sys\\n[0-9]+$", "response": "digits"}
    ],
    "fallback": "fallback text"
  })");
}

}  // namespace

TEST(CacheKey, StableAndSensitiveToEveryField) {
  ResolvedRequest r{"m", 0.0, "s", "u"};
  const auto k = r.cache_key();
  EXPECT_EQ(k.size(), 64u);
  EXPECT_EQ(k, (ResolvedRequest{"m", 0.0, "s", "u"}.cache_key()));
  EXPECT_NE(k, (ResolvedRequest{"m2", 0.0, "s", "u"}.cache_key()));
  EXPECT_NE(k, (ResolvedRequest{"m", 0.5, "s", "u"}.cache_key()));
  EXPECT_NE(k, (ResolvedRequest{"m", std::nullopt, "s", "u"}.cache_key()));
  EXPECT_NE(k, (ResolvedRequest{"m", 0.0, "s2", "u"}.cache_key()));
  EXPECT_NE(k, (ResolvedRequest{"m", 0.0, "s", "u2"}.cache_key()));
  // Field boundaries matter.
  EXPECT_NE((ResolvedRequest{"m", 0.0, "ab", "c"}.cache_key()), (ResolvedRequest{"m", 0.0, "a", "bc"}.cache_key()));
}

TEST(MockBackend, RulesEntriesAndFallback) {
  auto s = script();
  const ResolvedRequest exact{"scripted", 0.0, "x", "exact"};
  s["entries"][exact.cache_key()] = "from entry";
  MockScriptBackend mock(s);
  EXPECT_EQ(mock.model_id(), "scripted");
  EXPECT_EQ(mock.complete(exact), "from entry");
  EXPECT_EQ(mock.complete({"scripted", 0.0, "sys", "Criterion: Honorifics\nno dialogue"}), "Score: 5");
  const auto dialogue = mock.complete({"scripted", 0.0, "sys", "Criterion: Honorifics\n“Hi,” she said."});
  EXPECT_TRUE(dialogue == "Score: 2" || dialogue == "Score: 3");
  // Picks are a pure function of the request.
  EXPECT_EQ(dialogue, mock.complete({"scripted", 0.0, "sys", "Criterion: Honorifics\n“Hi,” she said."}));
  EXPECT_EQ(mock.complete({"scripted", 0.0, "sys", "123"}), "digits");
  EXPECT_EQ(mock.complete({"scripted", 0.0, "sys", "anything else"}), "fallback text");

  auto strict = script();
  strict.erase("fallback");
  MockScriptBackend no_fallback(strict);
  try {
    no_fallback.complete({"scripted", 0.0, "sys", "anything else"});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MockScriptMiss);
  }
  EXPECT_THROW(MockScriptBackend(json::parse(R"({"rules":[{"contains":["x"]}]})")), Error);
  EXPECT_THROW(MockScriptBackend(json::parse(R"({"rules":[{"regex":"(","response":"x"}]})")), Error);
}

TEST(Judge, CachesByResolvedRequest) {
  support::TempDir dir;
  auto config = quick_config();
  config.cache_dir = dir / "cache";
  auto backend = std::make_unique<FlakyBackend>(0, "answer");
  auto* raw = backend.get();
  Judge judge(config, std::move(backend));

  const JudgeRequest req{"sys", "user", std::nullopt};
  auto first = judge.complete(req);
  EXPECT_FALSE(first.cached);
  EXPECT_EQ(first.text, "answer");
  EXPECT_EQ(raw->last.temperature, 0.0);
  auto second = judge.complete(req);
  EXPECT_TRUE(second.cached);
  EXPECT_EQ(second.text, "answer");
  EXPECT_EQ(raw->calls.load(), 1);
  EXPECT_EQ(judge.stats().backend_calls, 1u);
  EXPECT_EQ(judge.stats().cache_hits, 1u);

  // A different temperature is a different request.
  judge.complete({"sys", "user", 0.7});
  EXPECT_EQ(raw->calls.load(), 2);

  // The entry on disk carries the request and the response.
  const auto key = judge.resolve(req).cache_key();
  const auto entry = json::parse(read_file(dir / "cache" / (key + ".json")));
  EXPECT_EQ(entry["key"], key);
  EXPECT_EQ(entry["request"]["user"], "user");
  EXPECT_EQ(entry["response"]["text"], "answer");

  // A second judge over the same cache directory never calls its backend.
  auto other = std::make_unique<FlakyBackend>(0, "different");
  auto* other_raw = other.get();
  Judge warm(config, std::move(other));
  EXPECT_EQ(warm.complete(req).text, "answer");
  EXPECT_EQ(other_raw->calls.load(), 0);
}

TEST(Judge, RetriesThenSucceeds) {
  auto config = quick_config();
  config.max_retries = 3;
  auto backend = std::make_unique<FlakyBackend>(2, "fine");
  auto* raw = backend.get();
  Judge judge(config, std::move(backend));
  EXPECT_EQ(judge.complete({"s", "u", std::nullopt}).text, "fine");
  EXPECT_EQ(raw->calls.load(), 3);
}

TEST(Judge, RetriesExhausted) {
  auto config = quick_config();
  config.max_retries = 2;
  auto backend = std::make_unique<FlakyBackend>(10, "never");
  auto* raw = backend.get();
  Judge judge(config, std::move(backend));
  try {
    judge.complete({"s", "u", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportExhausted);
  }
  EXPECT_EQ(raw->calls.load(), 3);
}

TEST(Judge, EmptyCompletionIsAnErrorAndNotCached) {
  support::TempDir dir;
  auto config = quick_config();
  config.cache_dir = dir.path();
  Judge judge(config, std::make_unique<FlakyBackend>(0, "  \n"));
  try {
    judge.complete({"s", "u", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyCompletion);
  }
  EXPECT_TRUE(std::filesystem::is_empty(dir.path()));
}

TEST(Judge, ConcurrencyLimitHolds) {
  auto config = quick_config();
  config.concurrency_limit = 2;
  auto backend = std::make_unique<SlowBackend>();
  auto* raw = backend.get();
  Judge judge(config, std::move(backend));
  parallel_for(12, 6, [&](std::size_t i) { judge.complete({"s", std::to_string(i), std::nullopt}); });
  EXPECT_LE(raw->peak.load(), 2);
  EXPECT_GE(raw->peak.load(), 1);
}

TEST(Judge, InvalidConfig) {
  auto config = quick_config();
  config.concurrency_limit = 0;
  EXPECT_THROW(Judge(config, std::make_unique<FlakyBackend>(0, "x")), Error);
  config = quick_config();
  config.temperature = -1.0;
  EXPECT_THROW(Judge(config, std::make_unique<FlakyBackend>(0, "x")), Error);
  config = quick_config();
  config.backend = MockBackend{};
  EXPECT_THROW(Judge{config}, Error);
  config.backend = LiveBackend{"not a url", "m"};
  EXPECT_THROW(Judge{config}, Error);
}

TEST(HttpBackend, BodyOmitsUnsetTemperature) {
  const auto with = HttpChatBackend::build_body({"m", 0.0, "sys", "user"});
  EXPECT_EQ(with["temperature"], 0.0);
  EXPECT_EQ(with["messages"][0]["role"], "system");
  EXPECT_EQ(with["messages"][1]["content"], "user");
  const auto without = HttpChatBackend::build_body({"m", std::nullopt, "", "user"});
  EXPECT_FALSE(without.contains("temperature"));
  EXPECT_EQ(without["messages"].size(), 1u);
  EXPECT_EQ(HttpChatBackend::extract_text(json::parse(R"({"choices":[{"message":{"content":"hi"}}]})")), "hi");
  EXPECT_THROW(HttpChatBackend::extract_text(json::parse(R"({"choices":[]})")), Error);
}

TEST(HttpBackend, RetriesOn429AgainstLocalServer) {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string seen_auth;
  json seen_body;
  std::mutex m;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 429;
      res.set_content("slow down", "text/plain");
      return;
    }
    {
      std::lock_guard lock(m);
      seen_auth = req.get_header_value("Authorization");
      seen_body = json::parse(req.body);
    }
    res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"Score: 4"}}]})", "application/json");
  });
  server.Post("/broken", [&](const httplib::Request&, httplib::Response& res) { res.status = 400; });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("LTEVAL_TEST_KEY", "secret", 1);
  auto config = quick_config();
  config.backend = LiveBackend{"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "gpt-test",
                               "LTEVAL_TEST_KEY"};
  config.timeout = 5s;
  Judge judge(config);
  const auto res = judge.complete({"sys", "user", std::nullopt});
  EXPECT_EQ(res.text, "Score: 4");
  EXPECT_EQ(hits.load(), 2);
  EXPECT_EQ(judge.stats().backend_calls, 2u);
  {
    std::lock_guard lock(m);
    EXPECT_EQ(seen_auth, "Bearer secret");
    EXPECT_EQ(seen_body["model"], "gpt-test");
    EXPECT_EQ(seen_body["temperature"], 0.0);
  }

  config.backend = LiveBackend{"http://127.0.0.1:" + std::to_string(port) + "/broken", "gpt-test", ""};
  Judge broken(config);
  try {
    broken.complete({"sys", "user", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Transport);
  }

  server.stop();
  thread.join();

  // Nothing listening: connection errors are retried, then reported.
  config.backend = LiveBackend{"http://127.0.0.1:" + std::to_string(port) + "/v1/chat/completions", "m", ""};
  config.max_retries = 1;
  config.timeout = 1s;
  Judge dead(config);
  try {
    dead.complete({"sys", "user", std::nullopt});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::TransportExhausted);
  }
}
