#include <doctest.h>

#include <cmath>
#include <limits>
#include <sstream>

#include "guardlab/core.hpp"
#include "guardlab/dataset_io.hpp"
#include "guardlab/random.hpp"
#include "support.hpp"

using namespace guardlab;

TEST_CASE("label_of uses the >= 0.5 convention") {
  CHECK(label_of(0.5) == Label::Safe);
  CHECK(label_of(0.98) == Label::Safe);
  CHECK(label_of(0.41) == Label::Unsafe);
  CHECK(label_of(0.49999) == Label::Unsafe);
  CHECK(label_of(std::nextafter(0.5, 0.0)) == Label::Unsafe);
}

TEST_CASE("bin_of follows closed outer brackets") {
  CHECK(bin_of(0.25) == ConfidenceBin::ConfidentlyUnsafe);
  CHECK(bin_of(0.75) == ConfidenceBin::ConfidentlySafe);
  CHECK(bin_of(0.5) == ConfidenceBin::Ambiguous);
  CHECK(bin_of(0.0) == ConfidenceBin::ConfidentlyUnsafe);
  CHECK(bin_of(1.0) == ConfidenceBin::ConfidentlySafe);
  CHECK(bin_of(std::nextafter(0.25, 1.0)) == ConfidenceBin::Ambiguous);
  CHECK(bin_of(std::nextafter(0.75, 0.0)) == ConfidenceBin::Ambiguous);
}

TEST_CASE("bins partition [0,1] and labels are monotone") {
  Rng rng(101);
  std::vector<double> ps;
  for (int i = 0; i < 10000; ++i) ps.push_back(rng.uniform());
  for (double p : ps) {
    const int hits = (p <= 0.25) + (p > 0.25 && p < 0.75) + (p >= 0.75);
    REQUIRE(hits == 1);
    const ConfidenceBin expected = p <= 0.25   ? ConfidenceBin::ConfidentlyUnsafe
                                   : p < 0.75 ? ConfidenceBin::Ambiguous
                                              : ConfidenceBin::ConfidentlySafe;
    REQUIRE(bin_of(p) == expected);
  }
  std::sort(ps.begin(), ps.end());
  for (std::size_t i = 1; i < ps.size(); ++i) {
    REQUIRE_FALSE((label_of(ps[i - 1]) == Label::Safe && label_of(ps[i]) == Label::Unsafe));
  }
}

TEST_CASE("logit values") {
  CHECK(logit(0.5) == 0.0);
  CHECK(logit(0.8) == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(logit(0.8) == doctest::Approx(1.3862943611198906).epsilon(1e-14));
  // ln((1 - 1e-6) / 1e-6); 1 - (1 - 1e-6) loses ~1e-10 relative precision.
  CHECK(logit(1.0) == doctest::Approx(13.815509557963773).epsilon(1e-9));
  CHECK(logit(0.0) == doctest::Approx(-13.815509557963773).epsilon(1e-9));
  CHECK(std::isfinite(logit(1.0, 1e-12)));
}

TEST_CASE("sigmoid values and stability") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(2.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(sigmoid(logit(0.3)) == doctest::Approx(0.3).epsilon(1e-14));
  CHECK(sigmoid(-800.0) >= 0.0);
  CHECK(sigmoid(800.0) == 1.0);
  CHECK(std::isfinite(sigmoid(-800.0)));
}

TEST_CASE("logit/sigmoid round trip against the clamp") {
  Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const double p = rng.uniform();
    const double clamped = std::clamp(p, 1e-6, 1.0 - 1e-6);
    REQUIRE(std::abs(sigmoid(logit(p)) - clamped) < 1e-12);
  }
}

TEST_CASE("score validation") {
  CHECK(is_valid_score(0.0));
  CHECK(is_valid_score(1.0));
  CHECK_FALSE(is_valid_score(-1e-9));
  CHECK_FALSE(is_valid_score(1.0 + 1e-9));
  CHECK_FALSE(is_valid_score(std::numeric_limits<double>::quiet_NaN()));
  CHECK_THROWS_AS(check_score(1.5), Error);
}

TEST_CASE("label parsing") {
  CHECK(parse_label("safe") == Label::Safe);
  CHECK(parse_label("unsafe") == Label::Unsafe);
  CHECK_FALSE(parse_label("maybe").has_value());
}

TEST_CASE("require_scored names the set") {
  auto s = testing::make_set("abc-7", 0.3, {0.4});
  s.paraphrases[0].score.reset();
  try {
    require_scored(s);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Unscored);
    CHECK(std::string(e.what()).find("abc-7") != std::string::npos);
  }
}

TEST_CASE("JSONL parsing") {
  SUBCASE("empty input gives no sets") {
    std::istringstream in("");
    CHECK(parse_sets(in, "mem").empty());
  }
  SUBCASE("one line") {
    std::istringstream in(R"({"id":"x1","original":{"text":"hi","score":0.7},"paraphrases":[{"text":"hey","score":0.6}]})");
    auto sets = parse_sets(in, "mem");
    REQUIRE(sets.size() == 1);
    CHECK(sets[0].id == "x1");
    CHECK(*sets[0].paraphrases[0].score == 0.6);
  }
  SUBCASE("missing original names the line") {
    std::istringstream in("\n{\"id\":\"x\",\"paraphrases\":[]}\n");
    try {
      parse_sets(in, "mem");
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Schema);
      CHECK(std::string(e.what()).find("mem:2") != std::string::npos);
    }
  }
  SUBCASE("malformed JSON is a parse error") {
    std::istringstream in("{\"id\":");
    CHECK_THROWS_WITH_AS(parse_sets(in, "mem"), doctest::Contains("mem:1"), Error);
  }
  SUBCASE("out-of-range score is rejected") {
    std::istringstream in(R"({"id":"x","original":{"text":"a","score":1.2},"paraphrases":[]})");
    CHECK_THROWS_AS(parse_sets(in, "mem"), Error);
  }
  SUBCASE("partially scored set is accepted only when scores are optional") {
    const std::string line =
        R"({"id":"x","original":{"text":"a","score":0.2},"paraphrases":[{"text":"b"}]})";
    std::istringstream optional(line);
    CHECK(parse_sets(optional, "mem").size() == 1);
    std::istringstream in(line);
    try {
      parse_sets(in, "mem", ScoreRequirement::Required);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::PartialScores);
    }
  }
  SUBCASE("required scores") {
    std::istringstream in(R"({"id":"x","original":{"text":"a"},"paraphrases":[{"text":"b"}]})");
    CHECK_NOTHROW(parse_sets(in, "mem"));
    std::istringstream again(R"({"id":"x","original":{"text":"a"},"paraphrases":[{"text":"b"}]})");
    CHECK_THROWS_AS(parse_sets(again, "mem", ScoreRequirement::Required), Error);
  }
}

TEST_CASE("save/load round trip on randomized sets") {
  testing::TempDir dir("core");
  Rng rng(5);
  std::vector<ParaphraseSet> sets;
  for (int i = 0; i < 50; ++i) {
    ParaphraseSet s;
    s.id = "r" + std::to_string(i) + (i % 7 == 0 ? ",\"quoted\"\n" : "");
    if (rng.bernoulli(0.5)) s.prompt = "prompt " + std::to_string(i);
    const bool scored = rng.bernoulli(0.7);
    s.original.text = "orig é " + std::to_string(i);
    if (scored) s.original.score = rng.uniform();
    const auto n = rng.below(6);
    for (std::size_t k = 0; k < n; ++k) {
      Member m;
      m.text = "p" + std::to_string(k);
      if (scored) m.score = rng.uniform();
      if (rng.bernoulli(0.3)) m.style = "outlier";
      s.paraphrases.push_back(m);
    }
    if (rng.bernoulli(0.5)) s.gold_label = rng.bernoulli(0.5) ? Label::Safe : Label::Unsafe;
    sets.push_back(s);
  }
  save_sets(sets, dir / "sets.jsonl");
  CHECK(load_sets(dir / "sets.jsonl") == sets);
  CHECK_FALSE(std::filesystem::exists(dir / "sets.jsonl.tmp"));
}

TEST_CASE("sha256 matches a known digest") {
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST_CASE("Rng is reproducible") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) REQUIRE(a.normal() == b.normal());
  std::vector<int> v{1, 2, 3, 4, 5, 6, 7, 8};
  auto w = v;
  Rng c(9), d(9);
  c.shuffle(v);
  d.shuffle(w);
  CHECK(v == w);
}
