#include <doctest.h>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <thread>

#include "guardlab/scoring_client.hpp"
#include "support.hpp"

using namespace guardlab;
using nlohmann::json;

namespace {

ServiceConfig fast_config() {
  ServiceConfig cfg;
  cfg.initial_backoff = std::chrono::milliseconds(1);
  cfg.max_backoff = std::chrono::milliseconds(4);
  cfg.auth_token_env = "GUARDLAB_TEST_TOKEN";
  return cfg;
}

json score_request(const std::string& text, const std::string& prompt = "") {
  return json{{"prompt", prompt}, {"response", text}};
}

json judge_request(const std::string& a, const std::string& b) {
  return json{{"a", a}, {"b", b}, {"system_prompt", std::string(kJudgePrompt)}};
}

std::string prob_body(double p) { return json{{"safety_probability", p}}.dump(); }

ParaphraseSet unscored(const std::string& id, std::size_t paras) {
  ParaphraseSet s;
  s.id = id;
  s.original.text = id + "-o";
  for (std::size_t i = 0; i < paras; ++i) s.paraphrases.push_back({id + "-p" + std::to_string(i)});
  return s;
}

}  // namespace

TEST_CASE("scores every member of a set") {
  ReplayTransport replay;
  const auto s = unscored("a", 2);
  replay.add("/score", score_request("a-o"), 200, prob_body(0.5));
  replay.add("/score", score_request("a-p0"), 200, prob_body(0.9));
  replay.add("/score", score_request("a-p1"), 200, prob_body(0.1));
  const auto out = score_set(s, fast_config(), replay);
  CHECK(out.errors.empty());
  CHECK(out.scored == 3);
  CHECK(out.requests == 3);
  CHECK(replay.requests() == 3);
  REQUIRE(out.sets.size() == 1);
  CHECK(*out.sets[0].original.score == 0.5);
  CHECK(*out.sets[0].paraphrases[0].score == 0.9);
  CHECK(*out.sets[0].paraphrases[1].score == 0.1);
  CHECK(out.sets[0].fully_scored());
}

TEST_CASE("prompt is forwarded with each member") {
  ReplayTransport replay;
  auto s = unscored("q", 0);
  s.prompt = "how do I";
  replay.add("/score", score_request("q-o", "how do I"), 200, prob_body(0.3));
  const auto out = score_set(s, fast_config(), replay);
  CHECK(out.errors.empty());
  CHECK(*out.sets[0].original.score == 0.3);
}

TEST_CASE("already scored members are skipped unless rescoring") {
  ReplayTransport replay;
  auto s = unscored("b", 1);
  s.original.score = 0.2;
  replay.add("/score", score_request("b-o"), 200, prob_body(0.7));
  replay.add("/score", score_request("b-p0"), 200, prob_body(0.6));
  auto out = score_set(s, fast_config(), replay);
  CHECK(replay.requests() == 1);
  CHECK(*out.sets[0].original.score == 0.2);
  ScoreOptions opts;
  opts.rescore = true;
  out = score_set(s, fast_config(), replay, opts);
  CHECK(replay.requests() == 3);
  CHECK(*out.sets[0].original.score == 0.7);
}

TEST_CASE("transient failures are retried up to the limit") {
  const auto req = score_request("t");
  SUBCASE("recovers after 503, 429 and a dropped connection") {
    ReplayTransport replay;
    replay.add("/score", req, 503, "");
    replay.add("/score", req, 429, "");
    replay.add("/score", req, 0, "");
    replay.add("/score", req, 200, prob_body(0.4));
    std::size_t attempts = 0;
    const auto reply = call_service(replay, fast_config(), "/score", req, &attempts);
    CHECK(reply["safety_probability"] == 0.4);
    CHECK(attempts == 4);
    CHECK(replay.requests() == 4);
  }
  SUBCASE("gives up after max_retries + 1 attempts") {
    ReplayTransport replay;
    replay.add("/score", req, 500, "");
    auto cfg = fast_config();
    cfg.max_retries = 2;
    try {
      call_service(replay, cfg, "/score", req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Transport);
    }
    CHECK(replay.requests() == 3);
  }
  SUBCASE("zero retries means one attempt") {
    ReplayTransport replay;
    replay.add("/score", req, 502, "");
    auto cfg = fast_config();
    cfg.max_retries = 0;
    CHECK_THROWS_AS(call_service(replay, cfg, "/score", req), Error);
    CHECK(replay.requests() == 1);
  }
}

TEST_CASE("permanent failures are not retried") {
  const auto req = score_request("t");
  SUBCASE("401 is an auth error") {
    ReplayTransport replay;
    replay.add("/score", req, 401, "");
    try {
      call_service(replay, fast_config(), "/score", req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Auth);
    }
    CHECK(replay.requests() == 1);
  }
  SUBCASE("400 is a transport error") {
    ReplayTransport replay;
    replay.add("/score", req, 400, "{}");
    try {
      call_service(replay, fast_config(), "/score", req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Transport);
    }
    CHECK(replay.requests() == 1);
  }
  SUBCASE("non-JSON body is a payload error") {
    ReplayTransport replay;
    replay.add("/score", req, 200, "<html>");
    try {
      call_service(replay, fast_config(), "/score", req);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Payload);
    }
  }
}

TEST_CASE("invalid probabilities are payload errors on the member") {
  ReplayTransport replay;
  const auto s = unscored("c", 2);
  replay.add("/score", score_request("c-o"), 200, prob_body(1.5));
  replay.add("/score", score_request("c-p0"), 200, R"({"other": 1})");
  replay.add("/score", score_request("c-p1"), 200, prob_body(0.8));
  const auto out = score_set(s, fast_config(), replay);
  REQUIRE(out.errors.size() == 2);
  for (const auto& e : out.errors) CHECK(e.kind == ErrorKind::Payload);
  CHECK(out.errors[0].item == "c/original");
  CHECK(out.errors[1].item == "c/paraphrase 0");
  CHECK_FALSE(out.sets[0].original.score.has_value());
  CHECK(out.sets[0].original.error.has_value());
  CHECK(*out.sets[0].paraphrases[1].score == 0.8);
}

TEST_CASE("service outage leaves sets unmodified apart from annotations") {
  ReplayTransport replay;  // no recordings: every request fails to connect
  auto cfg = fast_config();
  cfg.max_retries = 1;
  std::vector<ParaphraseSet> sets{testing::make_set("x", 0.3, {0.4, 0.6}),
                                  testing::make_set("y", 0.9, {0.8})};
  ScoreOptions opts;
  opts.rescore = true;
  const auto out = score_sets(sets, cfg, replay, opts);
  CHECK(out.scored == 0);
  CHECK(out.errors.size() == 5);
  REQUIRE(out.sets.size() == 2);
  for (std::size_t i = 0; i < sets.size(); ++i) {
    CHECK(out.sets[i].id == sets[i].id);
    CHECK(out.sets[i].original.score == sets[i].original.score);
    CHECK(out.sets[i].original.error.has_value());
    for (std::size_t j = 0; j < sets[i].paraphrases.size(); ++j) {
      CHECK(out.sets[i].paraphrases[j].score == sets[i].paraphrases[j].score);
    }
  }
  CHECK(replay.requests() == 10);
}

TEST_CASE("concurrency is bounded by max_in_flight") {
  ReplayTransport replay;
  replay.set_latency(std::chrono::milliseconds(15));
  std::vector<ParaphraseSet> sets;
  for (int i = 0; i < 6; ++i) {
    sets.push_back(unscored("k" + std::to_string(i), 3));
    replay.add("/score", score_request(sets.back().original.text), 200, prob_body(0.5));
    for (const auto& m : sets.back().paraphrases) {
      replay.add("/score", score_request(m.text), 200, prob_body(0.25));
    }
  }
  auto cfg = fast_config();
  cfg.max_in_flight = 3;
  const auto out = score_sets(sets, cfg, replay);
  CHECK(out.errors.empty());
  CHECK(out.scored == 24);
  CHECK(replay.max_concurrent() <= 3);
  CHECK(replay.max_concurrent() >= 2);
  for (std::size_t i = 0; i < sets.size(); ++i) CHECK(out.sets[i].id == sets[i].id);

  ReplayTransport serial;
  serial.set_latency(std::chrono::milliseconds(1));
  serial.add("/score", score_request("k0-o"), 200, prob_body(0.5));
  cfg.max_in_flight = 1;
  score_sets(std::span<const ParaphraseSet>(sets.data(), 2), cfg, serial);
  CHECK(serial.max_concurrent() == 1);
}

TEST_CASE("bearer token comes from the configured environment variable") {
  ReplayTransport replay;
  replay.add("/score", score_request("t"), 200, prob_body(0.5));
  auto cfg = fast_config();
  ::unsetenv("GUARDLAB_TEST_TOKEN");
  call_service(replay, cfg, "/score", score_request("t"));
  CHECK_FALSE(replay.last_token().has_value());
  ::setenv("GUARDLAB_TEST_TOKEN", "sekrit", 1);
  call_service(replay, cfg, "/score", score_request("t"));
  CHECK(replay.last_token() == "sekrit");
  ::unsetenv("GUARDLAB_TEST_TOKEN");
}

TEST_CASE("judge replies") {
  ReplayTransport replay;
  replay.add("/judge", judge_request("a1", "b1"), 200, R"({"verdict": "Yes", "prob": 0.93})");
  replay.add("/judge", judge_request("a2", "b2"), 200, R"({"verdict": "no."})");
  replay.add("/judge", judge_request("a3", "b3"), 200, R"({"verdict": "Maybe", "prob": 0.5})");
  replay.add("/judge", judge_request("a4", "b4"), 200, R"({"verdict": "yes", "prob": 7})");
  const std::vector<PairToJudge> pairs{
      {"a1", "b1", 0.9}, {"a2", "b2", std::nullopt}, {"a3", "b3", 0.1}, {"a4", "b4", 0.2}};
  const auto out = judge_pairs(pairs, fast_config(), replay);
  REQUIRE(out.pairs.size() == 2);
  CHECK(out.pairs[0].verdict == Verdict::Yes);
  CHECK(out.pairs[0].verdict_probability == 0.93);
  CHECK(out.pairs[0].gold_similarity == 0.9);
  CHECK_FALSE(out.pairs[0].probability_assumed);
  CHECK(out.pairs[1].verdict == Verdict::No);
  CHECK(out.pairs[1].verdict_probability == 1.0);
  CHECK(out.pairs[1].probability_assumed);
  REQUIRE(out.errors.size() == 2);
  CHECK(out.errors[0].item == "pair 2");
  CHECK(out.errors[0].kind == ErrorKind::Payload);
  CHECK(out.errors[1].item == "pair 3");
}

TEST_CASE("transcript files") {
  testing::TempDir dir("replay");
  testing::spit(dir / "t.jsonl",
                R"({"endpoint": "/score", "request": {"prompt": "", "response": "r"}, "status": 503, "body": ""})"
                "\n"
                R"({"endpoint": "/score", "request": {"prompt": "", "response": "r"}, "status": 200, "body": {"safety_probability": 0.66}})"
                "\n");
  auto replay = ReplayTransport::from_file(dir / "t.jsonl");
  const auto reply = call_service(*replay, fast_config(), "/score", score_request("r"));
  CHECK(reply["safety_probability"] == 0.66);
  CHECK(replay->requests() == 2);

  testing::spit(dir / "bad.jsonl", R"({"endpoint": "/score"})" "\n");
  CHECK_THROWS_AS(ReplayTransport::from_file(dir / "bad.jsonl"), Error);

  testing::spit(dir / "pairs.jsonl", R"({"a": "x", "b": "y", "gold_similarity": 0.4})" "\n"
                                     R"({"a": "p", "b": "q"})" "\n");
  const auto pairs = load_pairs_to_judge(dir / "pairs.jsonl");
  REQUIRE(pairs.size() == 2);
  CHECK(pairs[0].gold_similarity == 0.4);
  CHECK_FALSE(pairs[1].gold_similarity.has_value());
}

TEST_CASE("config validation") {
  auto cfg = fast_config();
  cfg.max_in_flight = 0;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = fast_config();
  cfg.backoff_multiplier = 0.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = fast_config();
  cfg.timeout = std::chrono::milliseconds(0);
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("HTTP transport against a local server") {
  httplib::Server server;
  std::string seen_auth;
  server.Post("/api/score", [&](const httplib::Request& req, httplib::Response& res) {
    seen_auth = req.get_header_value("Authorization");
    const auto body = json::parse(req.body);
    const double p = body["response"] == "safe text" ? 0.9 : 0.1;
    res.set_content(json{{"safety_probability", p}}.dump(), "application/json");
  });
  server.Post("/api/judge", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  auto cfg = fast_config();
  cfg.base_url = "http://127.0.0.1:" + std::to_string(port) + "/api/";
  cfg.max_retries = 1;
  HttpTransport http(cfg.base_url, cfg.timeout);
  ::setenv("GUARDLAB_TEST_TOKEN", "abc", 1);
  const auto reply = call_service(http, cfg, "/score", score_request("safe text"));
  CHECK(reply["safety_probability"] == 0.9);
  CHECK(seen_auth == "Bearer abc");
  ::unsetenv("GUARDLAB_TEST_TOKEN");
  CHECK_THROWS_AS(call_service(http, cfg, "/judge", judge_request("a", "b")), Error);

  server.stop();
  thread.join();

  HttpTransport down("http://127.0.0.1:" + std::to_string(port), std::chrono::milliseconds(200));
  const auto res = down.post("/score", "{}", std::nullopt);
  CHECK(res.status == 0);
  CHECK_FALSE(res.transport_error.empty());
}
