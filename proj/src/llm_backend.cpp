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

#include "ckma/llm_backend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

namespace ckma {

namespace {

std::string excerpt(std::string_view s, std::size_t max_len = 200) {
  if (s.size() <= max_len) return std::string(s);
  return std::string(s.substr(0, max_len)) + "...";
}

std::string render_rule(const std::string& tmpl, const std::smatch& m,
                        const std::string& user) {
  std::string out;
  std::size_t i = 0;
  while (i < tmpl.size()) {
    if (tmpl.compare(i, 2, "{{") == 0) {
      const auto close = tmpl.find("}}", i + 2);
      if (close != std::string::npos) {
        const std::string name = tmpl.substr(i + 2, close - i - 2);
        if (name == "user") {
          out += user;
          i = close + 2;
          continue;
        }
        if (!name.empty() &&
            std::all_of(name.begin(), name.end(), [](unsigned char c) {
              return std::isdigit(c) != 0;
            })) {
          const auto g = static_cast<std::size_t>(std::stoul(name));
          if (g < m.size()) out += m[g].str();
          i = close + 2;
          continue;
        }
      }
    }
    out += tmpl[i++];
  }
  return out;
}

}  // namespace

CompletionResponse CompletionBackend::complete(const CompletionRequest& req) {
  if (req.user_text.empty()) {
    throw std::invalid_argument("completion request: user_text is empty");
  }
  if (!(req.temperature >= 0.0 && req.temperature <= 2.0)) {
    throw std::invalid_argument("completion request: temperature not in [0,2]");
  }
  if (req.max_output_tokens < 1) {
    throw std::invalid_argument(
        "completion request: max_output_tokens must be positive");
  }
  ++calls_;
  return do_complete(req);
}

// ---------------------------------------------------------------- mock

std::unique_ptr<MockBackend> MockBackend::scripted(
    std::vector<std::string> script, bool cycle) {
  std::unique_ptr<MockBackend> b(new MockBackend(Mode::kScripted));
  b->script_ = std::move(script);
  b->cycle_ = cycle;
  return b;
}

std::unique_ptr<MockBackend> MockBackend::echo_user() {
  return std::unique_ptr<MockBackend>(new MockBackend(Mode::kEcho));
}

std::unique_ptr<MockBackend> MockBackend::rules(
    std::vector<MockRule> rules, std::optional<std::string> fallback) {
  std::unique_ptr<MockBackend> b(new MockBackend(Mode::kRules));
  for (auto& r : rules) {
    try {
      b->rules_.push_back({std::regex(r.pattern), std::move(r.response)});
    } catch (const std::regex_error& e) {
      throw std::invalid_argument("mock rule: bad pattern '" + r.pattern +
                                  "': " + e.what());
    }
  }
  b->fallback_ = std::move(fallback);
  return b;
}

std::unique_ptr<MockBackend> MockBackend::from_json_text(std::string_view text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("mock script: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("mode") || !doc["mode"].is_string()) {
    throw std::invalid_argument("mock script: missing key: mode");
  }
  const std::string mode = doc["mode"];
  if (mode == "echo") return echo_user();
  if (mode == "scripted") {
    if (!doc.contains("responses") || !doc["responses"].is_array()) {
      throw std::invalid_argument("mock script: missing key: responses");
    }
    return scripted(doc["responses"].get<std::vector<std::string>>(),
                    doc.value("cycle", false));
  }
  if (mode == "rules") {
    std::vector<MockRule> rules;
    for (const auto& r : doc.value("rules", nlohmann::json::array())) {
      if (!r.contains("match") || !r.contains("response")) {
        throw std::invalid_argument(
            "mock script: each rule needs match and response");
      }
      rules.push_back({r["match"].get<std::string>(),
                       r["response"].get<std::string>()});
    }
    std::optional<std::string> fallback;
    if (doc.contains("default")) fallback = doc["default"].get<std::string>();
    return MockBackend::rules(std::move(rules), std::move(fallback));
  }
  throw std::invalid_argument("mock script: unknown mode '" + mode + "'");
}

std::unique_ptr<MockBackend> MockBackend::from_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open mock script: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json_text(ss.str());
}

std::vector<CompletionRequest> MockBackend::requests() const {
  std::lock_guard<std::mutex> lock(mu_);
  return log_;
}

std::size_t MockBackend::concurrency_limit() const {
  return mode_ == Mode::kScripted ? 1 : 4;
}

std::string MockBackend::describe() const {
  switch (mode_) {
    case Mode::kScripted:
      return "mock:scripted";
    case Mode::kEcho:
      return "mock:echo";
    case Mode::kRules:
      return "mock:rules";
  }
  return "mock";
}

CompletionResponse MockBackend::do_complete(const CompletionRequest& req) {
  std::lock_guard<std::mutex> lock(mu_);
  log_.push_back(req);
  switch (mode_) {
    case Mode::kEcho:
      return {req.user_text, std::nullopt};
    case Mode::kScripted: {
      if (next_ >= script_.size()) {
        if (!cycle_ || script_.empty()) {
          throw BackendError("mock script exhausted after " +
                             std::to_string(script_.size()) + " responses");
        }
        next_ = 0;
      }
      return {script_[next_++], std::nullopt};
    }
    case Mode::kRules: {
      for (const auto& rule : rules_) {
        std::smatch m;
        if (std::regex_search(req.user_text, m, rule.pattern)) {
          return {render_rule(rule.response, m, req.user_text), std::nullopt};
        }
      }
      if (fallback_) {
        std::smatch none;
        return {render_rule(*fallback_, none, req.user_text), std::nullopt};
      }
      throw BackendError("no mock rule matched: " + excerpt(req.user_text, 80));
    }
  }
  throw BackendError("unreachable mock mode");
}

// ---------------------------------------------------------------- http

namespace {
thread_local int g_last_attempts = 0;
}  // namespace

class HttpBackend::Slot {
 public:
  explicit Slot(HttpBackend& b) : b_(b) {
    std::unique_lock<std::mutex> lock(b_.slot_mu_);
    b_.slot_cv_.wait(lock, [&] {
      return b_.in_flight_ < std::max<std::size_t>(1, b_.config_.concurrency);
    });
    ++b_.in_flight_;
  }
  ~Slot() {
    {
      std::lock_guard<std::mutex> lock(b_.slot_mu_);
      --b_.in_flight_;
    }
    b_.slot_cv_.notify_one();
  }
  Slot(const Slot&) = delete;
  Slot& operator=(const Slot&) = delete;

 private:
  HttpBackend& b_;
};

HttpBackend::HttpBackend(HttpConfig config) : config_(std::move(config)) {
  if (config_.retry.max_attempts < 1) {
    throw std::invalid_argument("retry policy: max_attempts must be >= 1");
  }
  const auto scheme_end = config_.base_url.find("://");
  if (scheme_end == std::string::npos) {
    throw std::invalid_argument("base_url needs a scheme: " + config_.base_url);
  }
  const auto path_start = config_.base_url.find('/', scheme_end + 3);
  scheme_host_port_ = config_.base_url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos
                           ? std::string()
                           : config_.base_url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  path_ = prefix + "/chat/completions";
}

int HttpBackend::last_attempts() { return g_last_attempts; }

std::string HttpBackend::describe() const {
  return "http:" + config_.base_url;
}

CompletionResponse HttpBackend::do_complete(const CompletionRequest& req) {
  nlohmann::json body;
  body["model"] = req.model_id.empty() ? config_.model_id : req.model_id;
  body["messages"] = nlohmann::json::array(
      {{{"role", "system"}, {"content", req.system_text}},
       {{"role", "user"}, {"content", req.user_text}}});
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens;
  const std::string payload = body.dump();

  httplib::Headers headers;
  if (!config_.api_key.empty()) {
    headers.emplace("Authorization", "Bearer " + config_.api_key);
  }

  Slot slot(*this);
  const auto timeout = std::chrono::duration<double>(config_.timeout_seconds);
  auto delay = std::chrono::duration<double, std::milli>(
      config_.retry.initial_delay);
  std::string last_error;
  g_last_attempts = 0;

  for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
    g_last_attempts = attempt;
    httplib::Client client(scheme_host_port_);
    client.set_connection_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_read_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));
    client.set_write_timeout(
        std::chrono::duration_cast<std::chrono::microseconds>(timeout));

    auto res = client.Post(path_, headers, payload, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
    } else if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status) + ": " +
                   excerpt(res->body);
    } else if (res->status < 200 || res->status >= 300) {
      throw RequestError(res->status, excerpt(res->body));
    } else {
      nlohmann::json doc = nlohmann::json::parse(res->body, nullptr, false);
      if (doc.is_discarded() || !doc.contains("choices") ||
          !doc["choices"].is_array() || doc["choices"].empty()) {
        throw RequestError(res->status, excerpt(res->body));
      }
      const auto& msg = doc["choices"][0].value("message", nlohmann::json{});
      if (!msg.is_object() || !msg.contains("content") ||
          !msg["content"].is_string()) {
        throw RequestError(res->status, excerpt(res->body));
      }
      CompletionResponse out{msg["content"].get<std::string>(), std::nullopt};
      if (doc.contains("usage") && doc["usage"].is_object()) {
        const auto& u = doc["usage"];
        out.token_usage = TokenUsage{u.value("prompt_tokens", 0L),
                                     u.value("completion_tokens", 0L)};
      }
      return out;
    }
    if (attempt < config_.retry.max_attempts) {
      std::this_thread::sleep_for(delay);
      delay *= config_.retry.multiplier;
    }
  }
  throw TransportError(last_error + " (after " +
                           std::to_string(config_.retry.max_attempts) +
                           " attempts)",
                       config_.retry.max_attempts);
}

// ---------------------------------------------------------------- json

namespace {

// Index one past the brace closing the object opened at text[open], or npos.
std::size_t match_object(std::string_view text, std::size_t open) {
  int depth = 0;
  bool in_string = false;
  bool escaped = false;
  for (std::size_t i = open; i < text.size(); ++i) {
    const char c = text[i];
    if (in_string) {
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::string_view::npos;
}

std::optional<std::string> scan_objects(std::string_view text) {
  for (std::size_t pos = text.find('{'); pos != std::string_view::npos;
       pos = text.find('{', pos + 1)) {
    const auto end = match_object(text, pos);
    if (end == std::string_view::npos) continue;
    std::string_view candidate = text.substr(pos, end - pos);
    if (nlohmann::json::accept(candidate)) return std::string(candidate);
  }
  return std::nullopt;
}

// Contents of the first ```-fenced block, without the info string.
std::optional<std::string_view> first_fenced_block(std::string_view text) {
  const auto open = text.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  auto body = text.find('\n', open);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  const auto close = text.find("```", body);
  if (close == std::string_view::npos) return text.substr(body);
  return text.substr(body, close - body);
}

}  // namespace

std::string extract_json(std::string_view completion_text) {
  if (auto block = first_fenced_block(completion_text)) {
    if (auto obj = scan_objects(*block)) return *obj;
  }
  if (auto obj = scan_objects(completion_text)) return *obj;
  throw ExtractionError("no JSON object found in completion: \"" +
                        excerpt(completion_text, 120) + "\"");
}

}  // namespace ckma
