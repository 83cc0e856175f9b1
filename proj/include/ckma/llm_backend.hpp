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

#ifndef CKMA_LLM_BACKEND_HPP_
#define CKMA_LLM_BACKEND_HPP_

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstddef>
#include <memory>
#include <mutex>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ckma {

struct CompletionRequest {
  std::string system_text;
  std::string user_text;
  double temperature = 0.0;
  int max_output_tokens = 1024;
  std::string model_id;
};

struct TokenUsage {
  long prompt = 0;
  long completion = 0;
};

struct CompletionResponse {
  std::string text;
  std::optional<TokenUsage> token_usage;
};

struct RetryPolicy {
  int max_attempts = 3;
  std::chrono::milliseconds initial_delay{500};
  double multiplier = 2.0;
};

class BackendError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Connection failures, or 429/5xx after the retry budget is spent.
class TransportError : public BackendError {
 public:
  TransportError(const std::string& what, int attempts)
      : BackendError(what), attempts_(attempts) {}
  int attempts() const { return attempts_; }

 private:
  int attempts_;
};

// Non-retryable HTTP status (4xx other than 429) or an unusable body.
class RequestError : public BackendError {
 public:
  RequestError(int status, std::string body_excerpt)
      : BackendError("request failed with HTTP " + std::to_string(status) +
                     ": " + body_excerpt),
        status_(status),
        body_excerpt_(std::move(body_excerpt)) {}
  int status() const { return status_; }
  const std::string& body_excerpt() const { return body_excerpt_; }

 private:
  int status_;
  std::string body_excerpt_;
};

class ExtractionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Text-completion backend. complete() validates the request, counts the call
// and forwards to the implementation. Implementations must be safe to call
// from several threads at once.
class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;

  CompletionResponse complete(const CompletionRequest& req);

  std::size_t call_count() const { return calls_.load(); }

  // Upper bound on useful parallel calls. 1 means callers must issue requests
  // sequentially to keep results reproducible.
  virtual std::size_t concurrency_limit() const = 0;

  // Short replayable description, e.g. "mock:scripted" or "http:<url>".
  virtual std::string describe() const = 0;

 protected:
  virtual CompletionResponse do_complete(const CompletionRequest& req) = 0;

 private:
  std::atomic<std::size_t> calls_{0};
};

struct MockRule {
  std::string pattern;   // ECMAScript regex searched in user_text
  std::string response;  // {{user}}, {{0}}, {{1}}, ... are substituted
};

// Deterministic offline backend. Three modes:
//   scripted - returns responses in order (optionally cycling)
//   echo     - returns the request's user_text
//   rules    - first rule whose pattern matches user_text renders its response
class MockBackend : public CompletionBackend {
 public:
  enum class Mode { kScripted, kEcho, kRules };

  static std::unique_ptr<MockBackend> scripted(std::vector<std::string> script,
                                               bool cycle = false);
  static std::unique_ptr<MockBackend> echo_user();
  static std::unique_ptr<MockBackend> rules(
      std::vector<MockRule> rules, std::optional<std::string> fallback = {});

  // Script file (JSON):
  //   {"mode":"scripted","responses":[...],"cycle":false}
  //   {"mode":"echo"}
  //   {"mode":"rules","rules":[{"match":..,"response":..}],"default":..}
  static std::unique_ptr<MockBackend> from_json_text(std::string_view text);
  static std::unique_ptr<MockBackend> from_file(const std::string& path);

  Mode mode() const { return mode_; }

  // Every request received, in arrival order.
  std::vector<CompletionRequest> requests() const;

  std::size_t concurrency_limit() const override;
  std::string describe() const override;

 protected:
  CompletionResponse do_complete(const CompletionRequest& req) override;

 private:
  struct CompiledRule {
    std::regex pattern;
    std::string response;
  };

  explicit MockBackend(Mode mode) : mode_(mode) {}

  Mode mode_;
  std::vector<std::string> script_;
  bool cycle_ = false;
  std::size_t next_ = 0;
  std::vector<CompiledRule> rules_;
  std::optional<std::string> fallback_;

  mutable std::mutex mu_;
  std::vector<CompletionRequest> log_;
};

struct HttpConfig {
  std::string base_url = "https://api.openai.com/v1";
  std::string model_id = "gpt-3.5-turbo";
  double timeout_seconds = 60.0;
  std::string api_key;  // taken from CKMA_API_KEY by callers
  RetryPolicy retry;
  std::size_t concurrency = 4;
};

// OpenAI-compatible POST {base_url}/chat/completions with [system, user].
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(HttpConfig config);

  // Attempts made by the most recent complete() on the calling thread.
  static int last_attempts();

  std::size_t concurrency_limit() const override { return config_.concurrency; }
  std::string describe() const override;
  const HttpConfig& config() const { return config_; }

 protected:
  CompletionResponse do_complete(const CompletionRequest& req) override;

 private:
  class Slot;

  HttpConfig config_;
  std::string scheme_host_port_;
  std::string path_;

  std::mutex slot_mu_;
  std::condition_variable slot_cv_;
  std::size_t in_flight_ = 0;
};

// Environment variable holding the API credential.
inline constexpr const char* kApiKeyEnv = "CKMA_API_KEY";

// Strips Markdown code fences and returns the first balanced top-level JSON
// object that parses. Throws ExtractionError with an excerpt otherwise.
std::string extract_json(std::string_view completion_text);

}  // namespace ckma

#endif  // CKMA_LLM_BACKEND_HPP_
