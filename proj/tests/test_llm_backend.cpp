// Copyright 2026 The CKMA Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <atomic>
#include <chrono>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ckma/llm_backend.hpp"
#include "ckma/parallel.hpp"

using namespace ckma;

namespace {

CompletionRequest request(std::string user = "hello there") {
  CompletionRequest r;
  r.system_text = "sys";
  r.user_text = std::move(user);
  r.model_id = "test-model";
  return r;
}

std::string chat_body(const std::string& content) {
  nlohmann::json j;
  j["choices"] = {{{"message", {{"role", "assistant"}, {"content", content}}}}};
  j["usage"] = {{"prompt_tokens", 11}, {"completion_tokens", 3}};
  return j.dump();
}

// httplib server on an ephemeral port, stopped on destruction.
class LocalServer {
 public:
  template <typename Setup>
  explicit LocalServer(Setup setup) {
    setup(server_);
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~LocalServer() {
    server_.stop();
    thread_.join();
  }
  std::string url(const std::string& prefix = "") const {
    return "http://127.0.0.1:" + std::to_string(port_) + prefix;
  }

 private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
};

HttpConfig fast_config(const std::string& url, int attempts = 3) {
  HttpConfig c;
  c.base_url = url;
  c.model_id = "default-model";
  c.api_key = "sk-test";
  c.timeout_seconds = 5;
  c.retry.max_attempts = attempts;
  c.retry.initial_delay = std::chrono::milliseconds(1);
  return c;
}

}  // namespace

TEST_CASE("scripted mock returns responses in order") {
  auto mock = MockBackend::scripted({"hello", "world"});
  CHECK(mock->complete(request()).text == "hello");
  CHECK(mock->complete(request()).text == "world");
  CHECK_THROWS_AS(mock->complete(request()), BackendError);
  CHECK(mock->call_count() == 3);
  CHECK(mock->concurrency_limit() == 1);
  CHECK(mock->describe() == "mock:scripted");

  auto cyc = MockBackend::scripted({"a", "b"}, true);
  std::string seen;
  for (int i = 0; i < 5; ++i) seen += cyc->complete(request()).text;
  CHECK(seen == "ababa");
}

TEST_CASE("echo mock returns the user text") {
  auto mock = MockBackend::echo_user();
  CHECK(mock->complete(request("repeat me")).text == "repeat me");
  REQUIRE(mock->requests().size() == 1);
  CHECK(mock->requests()[0].system_text == "sys");
}

TEST_CASE("rules mock renders the first matching rule") {
  auto mock = MockBackend::rules(
      {{"graph for (\\w+)", "G({{1}})"}, {"summar", "S: {{user}}"}},
      std::string("fallback"));
  CHECK(mock->complete(request("build graph for cats")).text == "G(cats)");
  CHECK(mock->complete(request("summarize")).text == "S: summarize");
  CHECK(mock->complete(request("other")).text == "fallback");
  auto strict = MockBackend::rules({{"x", "y"}});
  CHECK_THROWS_AS(strict->complete(request("nothing")), BackendError);
  CHECK_THROWS_AS(MockBackend::rules({{"(", "y"}}), std::invalid_argument);
}

TEST_CASE("mock script files") {
  auto s = MockBackend::from_json_text(
      R"({"mode":"scripted","responses":["one","two"]})");
  CHECK(s->mode() == MockBackend::Mode::kScripted);
  CHECK(s->complete(request()).text == "one");
  CHECK(MockBackend::from_json_text(R"({"mode":"echo"})")->mode() ==
        MockBackend::Mode::kEcho);
  auto r = MockBackend::from_json_text(
      R"({"mode":"rules","rules":[{"match":"a","response":"b"}],"default":"c"})");
  CHECK(r->complete(request("xyz")).text == "c");
  CHECK_THROWS_AS(MockBackend::from_json_text(R"({"mode":"nope"})"),
                  std::invalid_argument);
  CHECK_THROWS_AS(MockBackend::from_json_text("[1,2]"), std::invalid_argument);
  CHECK_THROWS_AS(MockBackend::from_file("/nonexistent/script.json"),
                  std::invalid_argument);
}

TEST_CASE("requests are validated before reaching the backend") {
  auto mock = MockBackend::echo_user();
  CHECK_THROWS_AS(mock->complete(request("")), std::invalid_argument);
  auto hot = request();
  hot.temperature = 2.5;
  CHECK_THROWS_AS(mock->complete(hot), std::invalid_argument);
  CHECK(mock->call_count() == 0);
}

TEST_CASE("scripted mock is deterministic for a fixed request sequence") {
  auto a = MockBackend::scripted({"x", "y", "z"});
  auto b = MockBackend::scripted({"x", "y", "z"});
  for (int i = 0; i < 3; ++i) {
    CHECK(a->complete(request()).text == b->complete(request()).text);
  }
}

TEST_CASE("extract_json strips fences and free text") {
  CHECK(extract_json("Here you go:\n```json\n{\"relations\":[]}\n```") ==
        "{\"relations\":[]}");
  CHECK(extract_json("{\"relations\":[]}") == "{\"relations\":[]}");
  CHECK(extract_json("Sure! {\"a\": {\"b\": \"}\"}} trailing") ==
        "{\"a\": {\"b\": \"}\"}}");
  CHECK(extract_json("{not json} then {\"ok\": true}") == "{\"ok\": true}");
  CHECK(extract_json("```\n{\"x\": \"\\\"{\"}\n```") == "{\"x\": \"\\\"{\"}");
}

TEST_CASE("extract_json fails without an object") {
  CHECK_THROWS_AS(extract_json("I cannot comply."), ExtractionError);
  CHECK_THROWS_AS(extract_json(""), ExtractionError);
  CHECK_THROWS_AS(extract_json("{\"open\": 1"), ExtractionError);
  try {
    extract_json("I cannot comply.");
  } catch (const ExtractionError& e) {
    CHECK(std::string(e.what()).find("I cannot comply.") != std::string::npos);
  }
}

TEST_CASE("extract_json is idempotent") {
  for (const char* text :
       {"Here you go:\n```json\n{\"relations\":[]}\n```",
        "prefix {\"a\": [1, {\"b\": 2}]} suffix", "{\"k\": \"v\"}",
        "```json\n{\n  \"x\": 1\n}\n```"}) {
    const auto once = extract_json(text);
    CHECK(extract_json(once) == once);
  }
}

TEST_CASE("http backend posts an OpenAI-compatible request") {
  nlohmann::json seen_body;
  std::string seen_auth;
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/v1/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      seen_body = nlohmann::json::parse(req.body);
                      seen_auth = req.get_header_value("Authorization");
                      res.set_content(chat_body("reply"), "application/json");
                    });
  });
  HttpBackend backend(fast_config(srv.url("/v1/")));
  auto req = request("the user text");
  req.temperature = 0.0;
  req.max_output_tokens = 77;
  const auto resp = backend.complete(req);
  CHECK(resp.text == "reply");
  REQUIRE(resp.token_usage);
  CHECK(resp.token_usage->prompt == 11);
  CHECK(resp.token_usage->completion == 3);
  CHECK(seen_auth == "Bearer sk-test");
  CHECK(seen_body["model"] == "test-model");
  CHECK(seen_body["temperature"] == 0.0);
  CHECK(seen_body["max_tokens"] == 77);
  REQUIRE(seen_body["messages"].size() == 2);
  CHECK(seen_body["messages"][0]["role"] == "system");
  CHECK(seen_body["messages"][0]["content"] == "sys");
  CHECK(seen_body["messages"][1]["role"] == "user");
  CHECK(seen_body["messages"][1]["content"] == "the user text");
  CHECK(HttpBackend::last_attempts() == 1);
}

TEST_CASE("http backend falls back to the configured model id") {
  std::string model;
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request& req, httplib::Response& res) {
                      model = nlohmann::json::parse(req.body)["model"];
                      res.set_content(chat_body("ok"), "application/json");
                    });
  });
  HttpBackend backend(fast_config(srv.url()));
  auto req = request();
  req.model_id.clear();
  backend.complete(req);
  CHECK(model == "default-model");
}

TEST_CASE("http backend retries 5xx and 429") {
  std::atomic<int> hits{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      const int n = ++hits;
                      if (n == 1) {
                        res.status = 503;
                      } else if (n == 2) {
                        res.status = 429;
                      } else {
                        res.set_content(chat_body("third time"),
                                        "application/json");
                      }
                    });
  });
  HttpBackend backend(fast_config(srv.url(), 3));
  CHECK(backend.complete(request()).text == "third time");
  CHECK(hits == 3);
  CHECK(HttpBackend::last_attempts() == 3);
}

TEST_CASE("http backend gives up after max_attempts") {
  std::atomic<int> hits{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      ++hits;
                      res.status = 500;
                      res.set_content("overloaded", "text/plain");
                    });
  });
  HttpBackend backend(fast_config(srv.url(), 3));
  try {
    backend.complete(request());
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 3);
    CHECK(std::string(e.what()).find("overloaded") != std::string::npos);
  }
  CHECK(hits == 3);
}

TEST_CASE("http backend does not retry other 4xx") {
  std::atomic<int> hits{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      ++hits;
                      res.status = 401;
                      res.set_content("{\"error\":\"bad key\"}",
                                      "application/json");
                    });
  });
  HttpBackend backend(fast_config(srv.url(), 3));
  try {
    backend.complete(request());
    FAIL("expected RequestError");
  } catch (const RequestError& e) {
    CHECK(e.status() == 401);
    CHECK(e.body_excerpt().find("bad key") != std::string::npos);
  }
  CHECK(hits == 1);
}

TEST_CASE("http backend rejects bodies without a message") {
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      res.set_content("{\"choices\":[]}", "application/json");
                    });
  });
  HttpBackend backend(fast_config(srv.url(), 2));
  CHECK_THROWS_AS(backend.complete(request()), RequestError);
}

TEST_CASE("http backend against an unreachable endpoint") {
  HttpBackend backend(fast_config("http://127.0.0.1:1", 2));
  try {
    backend.complete(request());
    FAIL("expected TransportError");
  } catch (const TransportError& e) {
    CHECK(e.attempts() == 2);
  }
  CHECK(HttpBackend::last_attempts() == 2);
}

TEST_CASE("http backend caps concurrent requests") {
  std::atomic<int> active{0}, peak{0};
  LocalServer srv([&](httplib::Server& s) {
    s.Post("/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      const int now = ++active;
                      int prev = peak.load();
                      while (now > prev && !peak.compare_exchange_weak(prev, now)) {
                      }
                      std::this_thread::sleep_for(std::chrono::milliseconds(30));
                      --active;
                      res.set_content(chat_body("ok"), "application/json");
                    });
  });
  auto cfg = fast_config(srv.url());
  cfg.concurrency = 2;
  HttpBackend backend(cfg);
  parallel_for(8, 8, [&](std::size_t) { backend.complete(request()); });
  CHECK(peak.load() <= 2);
  CHECK(backend.call_count() == 8);
}

TEST_CASE("http config validation") {
  CHECK_THROWS_AS(HttpBackend(fast_config("127.0.0.1:8080")),
                  std::invalid_argument);
  CHECK_THROWS_AS(HttpBackend(fast_config("http://localhost", 0)),
                  std::invalid_argument);
}
