#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gpmap/eval.hpp"

namespace gpmap {

struct CompletionRequest {
  std::string prompt;
  int max_new_tokens = 256;
  double temperature = 0.0;  // 0 keeps batch runs reproducible on the server side
  std::vector<std::string> stop;
};

struct EndpointConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string model_name;
  std::string auth_env;  // name of the env var holding the bearer token; never the token itself
  std::string completions_path = "/v1/completions";
  double timeout_seconds = 30.0;
  int max_retries = 3;
  int max_in_flight = 4;
  int retry_base_ms = 100;  // exponential backoff base
};

/// Connection-level failure or exhausted retries.
class TransportError : public std::runtime_error {
 public:
  explicit TransportError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Non-retryable HTTP response; carries the status and body.
class ProtocolError : public std::runtime_error {
 public:
  ProtocolError(int status, const std::string& body)
      : std::runtime_error("endpoint returned status " + std::to_string(status) +
                           (body.empty() ? "" : ": " + body)),
        status_(status),
        body_(body) {}
  int status() const { return status_; }
  const std::string& body() const { return body_; }

 private:
  int status_;
  std::string body_;
};

struct CompletionStats {
  int attempts = 0;
  int retries = 0;
};

/// POSTs a minimal completion request (model, prompt, max_new_tokens,
/// temperature, stop) and reads the completion text from the usual
/// response shapes (choices[0].text, choices[0].message.content, text,
/// content). Transient failures (connection errors, 408/429/5xx) are
/// retried with exponential backoff up to max_retries.
std::string complete(const CompletionRequest& request, const EndpointConfig& endpoint,
                     CompletionStats* stats = nullptr);

struct PromptJob {
  std::string item_id;
  int variant_index = 0;
  std::string prompt;
};

struct BatchReport {
  std::size_t ok = 0;
  std::size_t failed = 0;
};

/// Runs all jobs with at most max_in_flight requests outstanding and
/// writes an answers file sorted by (item_id, variant_index). Failed items
/// are recorded with error markers and the run continues.
BatchReport run_batch(const std::vector<PromptJob>& jobs, const EndpointConfig& endpoint,
                      const CompletionRequest& request_defaults,
                      const std::filesystem::path& out_path);

struct AnswerSet {
  AnswerMap answers;
  std::size_t duplicates = 0;  // duplicate keys: last record wins
  std::size_t errors = 0;      // rows carrying an error marker (skipped)
};

/// Reads a ModelAnswer file back; malformed lines raise DataError with the
/// line number.
AnswerSet replay_answers(const std::filesystem::path& path);

void write_answers(const std::filesystem::path& path, const AnswerMap& answers);

}  // namespace gpmap
