#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "guardlab/aggregate.hpp"
#include "guardlab/random.hpp"
#include "support.hpp"

using namespace guardlab;
namespace oracle = testing::oracle;

namespace {

AggregationStrategy with(StrategyKind kind) {
  AggregationStrategy s;
  s.kind = kind;
  return s;
}

}  // namespace

TEST_CASE("quantile examples") {
  const std::vector<double> v{0.1, 0.12, 0.15, 0.9};
  CHECK(quantile(v, 0.25) == doctest::Approx(0.115).epsilon(1e-14));
  CHECK(quantile(v, 0.25) == doctest::Approx(oracle::quantile(v, 0.25)).epsilon(1e-15));
  CHECK(quantile(std::vector<double>{0.3, 0.3, 0.3}, 0.17) == 0.3);
  CHECK(quantile(std::vector<double>{1, 2, 3, 4}, 0.5) == 2.5);
  CHECK(quantile(std::vector<double>{4, 1, 3, 2}, 0.0) == 1.0);
  CHECK(quantile(std::vector<double>{4, 1, 3, 2}, 1.0) == 4.0);
  CHECK_THROWS_AS(quantile(std::vector<double>{}, 0.5), Error);
  CHECK_THROWS_AS(quantile(std::vector<double>{1.0}, 1.5), Error);
}

TEST_CASE("Bowley skewness examples") {
  CHECK(bowley_skewness(std::vector<double>{-1, 0, 1}) == 0.0);
  CHECK(bowley_skewness(std::vector<double>{0, 0, 0, 10}) == doctest::Approx(1.0));
  CHECK(bowley_skewness(std::vector<double>{2, 2, 2, 2}) == 0.0);
  CHECK(bowley_skewness(std::vector<double>{0, 0, 0, 10}) ==
        doctest::Approx(oracle::bowley({0, 0, 0, 10})));
}

TEST_CASE("skew classification") {
  CHECK(classify_skew(0.5, 0.1) == SkewDirection::Right);
  CHECK(classify_skew(-0.5, 0.1) == SkewDirection::Left);
  CHECK(classify_skew(0.1, 0.1) == SkewDirection::Symmetric);
  CHECK(classify_skew(-0.1, 0.1) == SkewDirection::Symmetric);
}

TEST_CASE("aggregate_target examples") {
  CHECK(aggregate_target(std::vector<double>(5, 0.7), with(StrategyKind::SkewAware)).target ==
        doctest::Approx(0.7));

  const std::vector<double> v{0.1, 0.12, 0.15, 0.9};
  const auto skew = aggregate_target(v, with(StrategyKind::SkewAware));
  CHECK(skew.target == doctest::Approx(0.115).epsilon(1e-14));
  REQUIRE(skew.skewness.has_value());
  // Logits (-2.197, -1.992, -1.735, 2.197): Q1 -2.043, Q2 -1.864, Q3 -0.752.
  CHECK(*skew.skewness == doctest::Approx(0.7212).epsilon(1e-3));
  std::vector<double> z;
  for (double p : v) z.push_back(oracle::log_odds(p));
  CHECK(*skew.skewness == doctest::Approx(oracle::bowley(z)).epsilon(1e-12));
  CHECK(skew.direction == SkewDirection::Right);
  CHECK(*skew.chosen_percentile == 0.25);

  const auto mean = aggregate_target(v, with(StrategyKind::Mean));
  CHECK(mean.target == doctest::Approx(0.3175).epsilon(1e-14));
  CHECK(mean.target > skew.target);

  const auto med = aggregate_target(v, with(StrategyKind::Median));
  CHECK(med.target == doctest::Approx(0.135).epsilon(1e-14));
}

TEST_CASE("left skew takes the upper percentile") {
  const std::vector<double> v{0.1, 0.85, 0.88, 0.9};
  const auto t = aggregate_target(v, with(StrategyKind::SkewAware));
  CHECK(t.direction == SkewDirection::Left);
  CHECK(t.target == doctest::Approx(oracle::quantile(v, 0.75)));
  CHECK(t.target >= quantile(v, 0.5));
}

TEST_CASE("small sets are symmetric") {
  const auto t = aggregate_target(std::vector<double>{0.01, 0.99}, with(StrategyKind::SkewAware));
  CHECK(t.direction == SkewDirection::Symmetric);
  CHECK(t.target == doctest::Approx(0.01 + 0.4 * 0.98));
  CHECK(aggregate_target(std::vector<double>{0.3}, with(StrategyKind::SkewAware)).target == 0.3);
}

TEST_CASE("logit-scale interpolation stays between order statistics") {
  AggregationStrategy s;
  s.scale = PercentileScale::Logit;
  const std::vector<double> v{0.1, 0.12, 0.15, 0.9};
  const double t = aggregate_target(v, s).target;
  CHECK(t > 0.1);
  CHECK(t < 0.12);
  CHECK(t == doctest::Approx(1.0 / (1.0 + std::exp(-oracle::quantile(
                                                    {oracle::log_odds(0.1), oracle::log_odds(0.12),
                                                     oracle::log_odds(0.15), oracle::log_odds(0.9)},
                                                    0.25)))));
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(aggregate_target(std::vector<double>{}, with(StrategyKind::Mean)), Error);
  CHECK_THROWS_AS(aggregate_target(std::vector<double>{0.2, 1.3}, with(StrategyKind::Mean)), Error);
  AggregationStrategy bad;
  bad.percentiles.right_skew = 0.9;
  CHECK_THROWS_AS(aggregate_target(std::vector<double>{0.2, 0.3, 0.4}, bad), Error);
  bad = {};
  bad.skew_threshold = 0.0;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("mean") == StrategyKind::Mean);
  CHECK(parse_strategy("median") == StrategyKind::Median);
  CHECK(parse_strategy("skew") == StrategyKind::SkewAware);
  CHECK_FALSE(parse_strategy("mode").has_value());
  CHECK(to_string(StrategyKind::SkewAware) == "skew");
}

TEST_CASE("properties: bounded, permutation invariant, conservative, oracle-equal") {
  Rng rng(2024);
  const StrategyKind kinds[] = {StrategyKind::Mean, StrategyKind::Median, StrategyKind::SkewAware};
  for (int trial = 0; trial < 5000; ++trial) {
    const std::size_t n = 1 + rng.below(8);
    std::vector<double> v;
    for (std::size_t i = 0; i < n; ++i) v.push_back(rng.uniform());
    const double lo = *std::min_element(v.begin(), v.end());
    const double hi = *std::max_element(v.begin(), v.end());
    auto shuffled = v;
    rng.shuffle(shuffled);
    for (auto k : kinds) {
      const auto a = aggregate_target(v, with(k));
      REQUIRE(a.target >= lo);
      REQUIRE(a.target <= hi);
      REQUIRE(aggregate_target(shuffled, with(k)).target == a.target);
    }
    const auto s = aggregate_target(v, with(StrategyKind::SkewAware));
    const double median = oracle::quantile(v, 0.5);
    if (s.direction == SkewDirection::Right) REQUIRE(s.target <= median);
    if (s.direction == SkewDirection::Left) REQUIRE(s.target >= median);
    const auto o = oracle::skew_target(v);
    REQUIRE(std::abs(s.target - o.target) < 1e-12);
    REQUIRE(std::abs(aggregate_target(v, with(StrategyKind::Mean)).target - oracle::mean(v)) < 1e-12);
  }
}

TEST_CASE("order statistics commute with monotone maps") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 5; ++i) v.push_back(rng.uniform(0.01, 0.99));
    std::vector<double> z;
    for (double p : v) z.push_back(logit(p));
    // n = 5: levels 0, 0.25, 0.5, 0.75, 1 land exactly on order statistics.
    for (double q : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      REQUIRE(sigmoid(quantile(z, q)) == doctest::Approx(quantile(v, q)).epsilon(1e-12));
    }
  }
}
