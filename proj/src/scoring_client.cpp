#include "guardlab/scoring_client.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <functional>
#include <thread>

#include "guardlab/dataset_io.hpp"

namespace guardlab {

using nlohmann::json;

namespace {

bool retryable(int status) { return status == 0 || status == 429 || status >= 500; }

std::optional<std::string> read_token(const ServiceConfig& cfg) {
  if (cfg.auth_token_env.empty()) return std::nullopt;
  const char* value = std::getenv(cfg.auth_token_env.c_str());
  if (value == nullptr || *value == '\0') return std::nullopt;
  return std::string(value);
}

// Runs `work(i)` for i in [0, n) on at most `workers` threads.
void run_bounded(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& work) {
  workers = std::min(workers, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) work(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) work(i);
    });
  }
  for (auto& t : pool) t.join();
}

struct MemberRef {
  std::size_t set = 0;
  std::optional<std::size_t> paraphrase;  // empty: the original
};

}  // namespace

void ServiceConfig::validate() const {
  if (max_in_flight < 1) throw Error(ErrorKind::InvalidArgument, "max_in_flight must be >= 1");
  if (timeout.count() <= 0) throw Error(ErrorKind::InvalidArgument, "timeout must be positive");
  if (!(backoff_multiplier >= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "backoff multiplier must be >= 1");
  }
}

HttpTransport::HttpTransport(std::string base_url, std::chrono::milliseconds timeout)
    : timeout_(timeout) {
  const auto scheme = base_url.find("://");
  const auto path_start = base_url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) {
    origin_ = std::move(base_url);
  } else {
    origin_ = base_url.substr(0, path_start);
    path_prefix_ = base_url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
  }
}

HttpResponse HttpTransport::post(const std::string& path, const std::string& body,
                                 const std::optional<std::string>& bearer_token) {
  httplib::Client client(origin_);
  const auto secs = static_cast<time_t>(timeout_.count() / 1000);
  const auto usecs = static_cast<time_t>((timeout_.count() % 1000) * 1000);
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);
  httplib::Headers headers;
  if (bearer_token) headers.emplace("Authorization", "Bearer " + *bearer_token);
  auto res = client.Post(path_prefix_ + path, headers, body, "application/json");
  HttpResponse out;
  if (!res) {
    out.transport_error = httplib::to_string(res.error());
    return out;
  }
  out.status = res->status;
  out.body = res->body;
  return out;
}

std::unique_ptr<ReplayTransport> ReplayTransport::from_file(const std::filesystem::path& path) {
  auto replay = std::make_unique<ReplayTransport>();
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const std::string where = path.string() + ":" + std::to_string(line);
    if (!j.contains("endpoint") || !j.contains("request") || !j.contains("status")) {
      throw Error(ErrorKind::Schema, where + ": transcript entries need endpoint, request, status");
    }
    const auto& body = j.contains("body") ? j["body"] : json(nullptr);
    replay->add(j["endpoint"].get<std::string>(), j["request"], j["status"].get<int>(),
               body.is_string() ? body.get<std::string>() : body.dump());
  });
  return replay;
}

std::string ReplayTransport::key(const std::string& endpoint, const json& request) {
  return endpoint + "\n" + request.dump();
}

void ReplayTransport::add(const std::string& endpoint, const json& request, int status,
                          std::string body) {
  std::lock_guard lock(mutex_);
  HttpResponse r;
  r.status = status;
  r.body = std::move(body);
  if (status == 0) r.transport_error = "recorded connection failure";
  entries_[key(endpoint, request)].responses.push_back(std::move(r));
}

HttpResponse ReplayTransport::post(const std::string& path, const std::string& body,
                                   const std::optional<std::string>& bearer_token) {
  ++requests_;
  const auto now = ++in_flight_;
  auto seen = max_concurrent_.load();
  while (now > seen && !max_concurrent_.compare_exchange_weak(seen, now)) {
  }
  if (latency_.count() > 0) std::this_thread::sleep_for(latency_);

  HttpResponse out;
  {
    std::lock_guard lock(mutex_);
    last_token_ = bearer_token;
    json request = json::parse(body, nullptr, false);
    auto it = entries_.find(key(path, request));
    if (it == entries_.end() || it->second.responses.empty()) {
      out.transport_error = "no recorded response for " + path;
    } else {
      auto& q = it->second;
      out = q.responses[std::min(q.next, q.responses.size() - 1)];
      ++q.next;
    }
  }
  --in_flight_;
  return out;
}

std::optional<std::string> ReplayTransport::last_token() const {
  std::lock_guard lock(mutex_);
  return last_token_;
}

json call_service(Transport& transport, const ServiceConfig& cfg, const std::string& endpoint,
                  const json& request, std::size_t* attempts) {
  const auto token = read_token(cfg);
  const std::string body = request.dump();
  auto backoff = cfg.initial_backoff;
  std::string last_failure;
  for (std::size_t attempt = 0; attempt <= cfg.max_retries; ++attempt) {
    if (attempt > 0) {
      std::this_thread::sleep_for(backoff);
      backoff = std::min(cfg.max_backoff,
                         std::chrono::milliseconds(static_cast<long long>(
                             static_cast<double>(backoff.count()) * cfg.backoff_multiplier)));
    }
    if (attempts) ++*attempts;
    const auto res = transport.post(endpoint, body, token);
    if (res.status == 401 || res.status == 403) {
      throw Error(ErrorKind::Auth, endpoint + ": service rejected credentials (HTTP " +
                                       std::to_string(res.status) + ")");
    }
    if (retryable(res.status)) {
      last_failure = res.status == 0 ? res.transport_error : "HTTP " + std::to_string(res.status);
      continue;
    }
    if (res.status < 200 || res.status >= 300) {
      throw Error(ErrorKind::Transport, endpoint + ": HTTP " + std::to_string(res.status));
    }
    json parsed = json::parse(res.body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_object()) {
      throw Error(ErrorKind::Payload, endpoint + ": response is not a JSON object");
    }
    return parsed;
  }
  throw Error(ErrorKind::Transport, endpoint + ": giving up after " +
                                        std::to_string(cfg.max_retries + 1) +
                                        " attempts (" + last_failure + ")");
}

ScoreOutcome score_sets(std::span<const ParaphraseSet> sets, const ServiceConfig& cfg,
                        Transport& transport, const ScoreOptions& options) {
  cfg.validate();
  ScoreOutcome out;
  out.sets.assign(sets.begin(), sets.end());

  std::vector<MemberRef> refs;
  auto member = [&](const MemberRef& r) -> Member& {
    auto& s = out.sets[r.set];
    return r.paraphrase ? s.paraphrases[*r.paraphrase] : s.original;
  };
  for (std::size_t i = 0; i < out.sets.size(); ++i) {
    refs.push_back({i, std::nullopt});
    for (std::size_t j = 0; j < out.sets[i].paraphrases.size(); ++j) refs.push_back({i, j});
  }
  std::erase_if(refs, [&](const MemberRef& r) {
    return !options.rescore && member(r).score.has_value();
  });

  std::vector<std::optional<double>> scores(refs.size());
  std::vector<std::optional<ItemError>> failures(refs.size());
  std::vector<std::size_t> attempts(refs.size(), 0);

  run_bounded(refs.size(), cfg.max_in_flight, [&](std::size_t k) {
    const auto& r = refs[k];
    const auto& set = out.sets[r.set];
    const std::string item =
        set.id + (r.paraphrase ? "/paraphrase " + std::to_string(*r.paraphrase) : "/original");
    json request = json::object();
    request["prompt"] = set.prompt.value_or("");
    request["response"] = member(r).text;
    try {
      const auto reply = call_service(transport, cfg, "/score", request, &attempts[k]);
      auto p = reply.find("safety_probability");
      if (p == reply.end() || !p->is_number() || !is_valid_score(p->get<double>())) {
        throw Error(ErrorKind::Payload, "/score: 'safety_probability' missing or outside [0, 1]");
      }
      scores[k] = p->get<double>();
    } catch (const Error& e) {
      failures[k] = ItemError{item, e.kind(), e.what()};
    }
  });

  for (std::size_t k = 0; k < refs.size(); ++k) {
    auto& m = member(refs[k]);
    out.requests += attempts[k];
    if (scores[k]) {
      m.score = scores[k];
      m.error.reset();
      ++out.scored;
    } else {
      m.error = std::string(to_string(failures[k]->kind)) + ": " + failures[k]->message;
      out.errors.push_back(*failures[k]);
    }
  }
  return out;
}

ScoreOutcome score_set(const ParaphraseSet& set, const ServiceConfig& cfg, Transport& transport,
                       const ScoreOptions& options) {
  return score_sets(std::span<const ParaphraseSet>(&set, 1), cfg, transport, options);
}

JudgeOutcome judge_pairs(std::span<const PairToJudge> pairs, const ServiceConfig& cfg,
                         Transport& transport) {
  cfg.validate();
  std::vector<std::optional<JudgedPair>> results(pairs.size());
  std::vector<std::optional<ItemError>> failures(pairs.size());
  std::vector<std::size_t> attempts(pairs.size(), 0);

  run_bounded(pairs.size(), cfg.max_in_flight, [&](std::size_t k) {
    const auto& pair = pairs[k];
    json request = json::object();
    request["a"] = pair.a;
    request["b"] = pair.b;
    request["system_prompt"] = std::string(kJudgePrompt);
    try {
      const auto reply = call_service(transport, cfg, "/judge", request, &attempts[k]);
      auto v = reply.find("verdict");
      const auto verdict = (v != reply.end() && v->is_string())
                               ? parse_verdict(v->get<std::string>())
                               : std::nullopt;
      if (!verdict) {
        throw Error(ErrorKind::Payload,
                    "/judge: unparseable verdict " + (v == reply.end() ? "<missing>" : v->dump()));
      }
      JudgedPair judged{pair.a, pair.b, *verdict, 1.0, pair.gold_similarity, false};
      auto prob = reply.find("prob");
      if (prob == reply.end() || prob->is_null()) {
        judged.probability_assumed = true;
      } else if (prob->is_number() && is_valid_score(prob->get<double>())) {
        judged.verdict_probability = prob->get<double>();
      } else {
        throw Error(ErrorKind::Payload, "/judge: 'prob' outside [0, 1]");
      }
      results[k] = std::move(judged);
    } catch (const Error& e) {
      failures[k] = ItemError{"pair " + std::to_string(k), e.kind(), e.what()};
    }
  });

  JudgeOutcome out;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    out.requests += attempts[k];
    if (results[k]) out.pairs.push_back(std::move(*results[k]));
    else out.errors.push_back(*failures[k]);
  }
  return out;
}

std::vector<PairToJudge> load_pairs_to_judge(const std::filesystem::path& path) {
  std::vector<PairToJudge> out;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const std::string where = path.string() + ":" + std::to_string(line);
    if (!j.is_object() || !j.contains("a") || !j.contains("b") || !j["a"].is_string() ||
        !j["b"].is_string()) {
      throw Error(ErrorKind::Schema, where + ": expected {\"a\": ..., \"b\": ...}");
    }
    PairToJudge p{j["a"].get<std::string>(), j["b"].get<std::string>(), std::nullopt};
    if (auto g = j.find("gold_similarity"); g != j.end() && g->is_number()) {
      p.gold_similarity = g->get<double>();
    }
    out.push_back(std::move(p));
  });
  return out;
}

}  // namespace guardlab
