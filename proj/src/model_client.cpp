#include "gpmap/model_client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "gpmap/util.hpp"

namespace gpmap {

using nlohmann::json;

namespace {

void validate_endpoint(const EndpointConfig& endpoint) {
  if (endpoint.max_in_flight < 1) throw UsageError("endpoint max_in_flight must be >= 1");
  if (endpoint.timeout_seconds <= 0) throw UsageError("endpoint timeout must be > 0");
  if (endpoint.max_retries < 0) throw UsageError("endpoint max_retries must be >= 0");
}

bool transient_status(int status) {
  return status == 408 || status == 429 || (status >= 500 && status < 600);
}

std::string extract_text(const json& j) {
  if (j.contains("choices") && j["choices"].is_array() && !j["choices"].empty()) {
    const auto& choice = j["choices"][0];
    if (choice.contains("text") && choice["text"].is_string()) return choice["text"];
    if (choice.contains("message") && choice["message"].contains("content")) {
      return choice["message"]["content"];
    }
  }
  if (j.contains("text") && j["text"].is_string()) return j["text"];
  if (j.contains("content") && j["content"].is_string()) return j["content"];
  throw DataError("completion response carries no recognizable text field");
}

}  // namespace

std::string complete(const CompletionRequest& request, const EndpointConfig& endpoint,
                     CompletionStats* stats) {
  validate_endpoint(endpoint);
  if (request.prompt.empty()) throw DataError("completion request has an empty prompt");
  if (request.max_new_tokens <= 0) throw DataError("max_new_tokens must be positive");
  if (request.temperature < 0) throw DataError("temperature must be nonnegative");

  httplib::Client client(endpoint.base_url);
  auto seconds = static_cast<time_t>(endpoint.timeout_seconds);
  auto micros = static_cast<time_t>((endpoint.timeout_seconds - static_cast<double>(seconds)) * 1e6);
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);

  httplib::Headers headers;
  if (!endpoint.auth_env.empty()) {
    const char* token = std::getenv(endpoint.auth_env.c_str());
    if (!token) throw UsageError("auth env var " + endpoint.auth_env + " is not set");
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  json body{{"prompt", request.prompt},
            {"max_new_tokens", request.max_new_tokens},
            {"temperature", request.temperature}};
  if (!endpoint.model_name.empty()) body["model"] = endpoint.model_name;
  if (!request.stop.empty()) body["stop"] = request.stop;
  std::string payload = body.dump();

  std::string last_failure;
  for (int attempt = 0; attempt <= endpoint.max_retries; ++attempt) {
    if (stats) {
      ++stats->attempts;
      stats->retries = attempt;
    }
    auto res = client.Post(endpoint.completions_path, headers, payload, "application/json");
    if (res && res->status >= 200 && res->status < 300) {
      try {
        return extract_text(json::parse(res->body));
      } catch (const json::exception& e) {
        throw DataError(std::string("completion response is not valid JSON: ") + e.what());
      }
    }
    if (res && !transient_status(res->status)) {
      throw ProtocolError(res->status, res->body);
    }
    last_failure = res ? "status " + std::to_string(res->status)
                       : "connection failed (" + httplib::to_string(res.error()) + ")";
    if (attempt < endpoint.max_retries) {
      auto delay = std::chrono::milliseconds(
          static_cast<std::int64_t>(endpoint.retry_base_ms) * (std::int64_t{1} << attempt));
      std::this_thread::sleep_for(delay);
    }
  }
  throw TransportError("exhausted " + std::to_string(endpoint.max_retries) + " retries against " +
                       endpoint.base_url + ": " + last_failure);
}

BatchReport run_batch(const std::vector<PromptJob>& jobs, const EndpointConfig& endpoint,
                      const CompletionRequest& request_defaults,
                      const std::filesystem::path& out_path) {
  validate_endpoint(endpoint);
  if (jobs.empty()) throw DataError("run_batch: prompt list is empty");

  struct Slot {
    bool ok = false;
    std::string text;  // completion text or error message
  };
  std::vector<Slot> results(jobs.size());
  std::atomic<std::size_t> next{0};

  auto worker = [&]() {
    while (true) {
      std::size_t i = next.fetch_add(1);
      if (i >= jobs.size()) break;
      CompletionRequest req = request_defaults;
      req.prompt = jobs[i].prompt;
      try {
        results[i].text = complete(req, endpoint);
        results[i].ok = true;
      } catch (const std::exception& e) {
        results[i].text = e.what();
        results[i].ok = false;
      }
    }
  };

  std::size_t thread_count = std::min<std::size_t>(static_cast<std::size_t>(endpoint.max_in_flight),
                                                   jobs.size());
  std::vector<std::thread> threads;
  threads.reserve(thread_count);
  for (std::size_t t = 0; t < thread_count; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();

  std::vector<std::size_t> order(jobs.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(jobs[a].item_id, jobs[a].variant_index) <
           std::tie(jobs[b].item_id, jobs[b].variant_index);
  });

  BatchReport report;
  std::ostringstream out;
  for (auto i : order) {
    json j{{"item_id", jobs[i].item_id}, {"variant_index", jobs[i].variant_index}};
    if (results[i].ok) {
      j["raw_text"] = results[i].text;
      ++report.ok;
    } else {
      j["error"] = results[i].text;
      ++report.failed;
    }
    out << j.dump() << '\n';
  }
  write_text_file(out_path, out.str());
  return report;
}

AnswerSet replay_answers(const std::filesystem::path& path) {
  AnswerSet set;
  for_each_line(path, [&](std::size_t line_no, const std::string& line) {
    if (trim(line).empty()) return;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
    try {
      std::string item_id = j.at("item_id").get<std::string>();
      int variant = j.at("variant_index").get<int>();
      if (j.contains("error")) {
        ++set.errors;
        return;
      }
      std::string text = j.at("raw_text").get<std::string>();
      auto [it, inserted] = set.answers.insert_or_assign(AnswerKey{item_id, variant}, std::move(text));
      (void)it;
      if (!inserted) ++set.duplicates;
    } catch (const json::exception& e) {
      throw DataError(path.string() + ": line " + std::to_string(line_no) + ": " + e.what());
    }
  });
  return set;
}

void write_answers(const std::filesystem::path& path, const AnswerMap& answers) {
  std::ostringstream out;
  for (const auto& [key, text] : answers) {
    json j{{"item_id", key.first}, {"variant_index", key.second}, {"raw_text", text}};
    out << j.dump() << '\n';
  }
  write_text_file(path, out.str());
}

}  // namespace gpmap
