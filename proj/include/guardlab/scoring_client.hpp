#pragma once

// Client for an external guard/judge scoring service.
//
// Wire protocol:
//   POST {base}/score  {"prompt", "response"}          -> {"safety_probability": p}
//   POST {base}/judge  {"a", "b", "system_prompt"}     -> {"verdict": "yes", "prob": q}
//
// Requests run on at most `max_in_flight` workers; transient failures (no
// response, 5xx, 429) are retried with exponential backoff.

#include <atomic>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "guardlab/core.hpp"
#include "guardlab/judge_filter.hpp"

namespace guardlab {

inline constexpr const char* kServiceTokenEnv = "GUARDLAB_SERVICE_TOKEN";

struct ServiceConfig {
  std::string base_url = "http://127.0.0.1:8080";
  std::string auth_token_env = kServiceTokenEnv;
  std::chrono::milliseconds timeout{30'000};
  std::size_t max_retries = 3;
  std::size_t max_in_flight = 4;
  std::chrono::milliseconds initial_backoff{200};
  double backoff_multiplier = 2.0;
  std::chrono::milliseconds max_backoff{5'000};

  void validate() const;
};

struct HttpResponse {
  /// 0 when no HTTP response was received.
  int status = 0;
  std::string body;
  std::string transport_error;
};

class Transport {
 public:
  virtual ~Transport() = default;
  /// Must be safe to call from several threads at once.
  virtual HttpResponse post(const std::string& path, const std::string& body,
                            const std::optional<std::string>& bearer_token) = 0;
};

class HttpTransport final : public Transport {
 public:
  HttpTransport(std::string base_url, std::chrono::milliseconds timeout);
  HttpResponse post(const std::string& path, const std::string& body,
                    const std::optional<std::string>& bearer_token) override;

 private:
  std::string origin_;
  std::string path_prefix_;
  std::chrono::milliseconds timeout_;
};

/// Replays a recorded transcript: JSONL of
/// `{"endpoint": "/score", "request": {...}, "status": 200, "body": {...}}`.
/// Entries with the same endpoint and request are served in order; the last
/// one repeats. Unknown requests get a transport failure.
class ReplayTransport final : public Transport {
 public:
  static std::unique_ptr<ReplayTransport> from_file(const std::filesystem::path& path);
  void add(const std::string& endpoint, const nlohmann::json& request, int status,
           std::string body);

  HttpResponse post(const std::string& path, const std::string& body,
                    const std::optional<std::string>& bearer_token) override;

  std::size_t requests() const { return requests_.load(); }
  std::size_t max_concurrent() const { return max_concurrent_.load(); }
  std::optional<std::string> last_token() const;
  /// Artificial per-request latency, to make overlap observable in tests.
  void set_latency(std::chrono::milliseconds latency) { latency_ = latency; }

 private:
  struct Queue {
    std::vector<HttpResponse> responses;
    std::size_t next = 0;
  };
  static std::string key(const std::string& endpoint, const nlohmann::json& request);

  mutable std::mutex mutex_;
  std::map<std::string, Queue> entries_;
  std::optional<std::string> last_token_;
  std::atomic<std::size_t> requests_{0};
  std::atomic<std::size_t> in_flight_{0};
  std::atomic<std::size_t> max_concurrent_{0};
  std::chrono::milliseconds latency_{0};
};

struct ItemError {
  std::string item;
  ErrorKind kind = ErrorKind::Transport;
  std::string message;
};

struct ScoreOutcome {
  std::vector<ParaphraseSet> sets;
  std::vector<ItemError> errors;
  std::size_t scored = 0;
  std::size_t requests = 0;
};

struct ScoreOptions {
  /// Re-request members that already carry a score.
  bool rescore = false;
};

struct PairToJudge {
  std::string a;
  std::string b;
  std::optional<double> gold_similarity;
};

struct JudgeOutcome {
  std::vector<JudgedPair> pairs;
  std::vector<ItemError> errors;
  std::size_t requests = 0;
};

/// Sends one request with retries. Throws Error{Transport|Auth|Payload}.
nlohmann::json call_service(Transport& transport, const ServiceConfig& cfg,
                            const std::string& endpoint, const nlohmann::json& request,
                            std::size_t* attempts = nullptr);

/// Scores every member of every set. Failed members keep their previous score
/// and gain an `error` annotation; nothing is dropped. Output order matches input.
ScoreOutcome score_sets(std::span<const ParaphraseSet> sets, const ServiceConfig& cfg,
                        Transport& transport, const ScoreOptions& options = {});
ScoreOutcome score_set(const ParaphraseSet& set, const ServiceConfig& cfg, Transport& transport,
                       const ScoreOptions& options = {});

/// Pairs whose reply cannot be parsed are skipped and reported in `errors`.
JudgeOutcome judge_pairs(std::span<const PairToJudge> pairs, const ServiceConfig& cfg,
                         Transport& transport);

std::vector<PairToJudge> load_pairs_to_judge(const std::filesystem::path& path);

}  // namespace guardlab
