#pragma once

// Set-level training targets: mean, median and skew-aware conservative
// aggregation of the safety scores in one paraphrase set.

#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "guardlab/core.hpp"

namespace guardlab {

enum class StrategyKind { Mean, Median, SkewAware };

/// Scale on which the chosen skew-aware percentile is interpolated. Skew
/// detection always happens on logits.
enum class PercentileScale { Probability, Logit };

enum class SkewDirection { Left, Symmetric, Right };

struct SkewPercentiles {
  double right_skew = 0.25;
  double symmetric = 0.40;
  double left_skew = 0.75;
};

struct AggregationStrategy {
  StrategyKind kind = StrategyKind::SkewAware;
  double skew_threshold = 0.1;
  SkewPercentiles percentiles{};
  PercentileScale scale = PercentileScale::Probability;
  double logit_eps = kDefaultLogitEps;

  /// Throws Error{InvalidArgument} on unordered percentiles or a non-positive threshold.
  void validate() const;
};

struct AggregationTarget {
  double target = 0.0;
  StrategyKind strategy = StrategyKind::SkewAware;
  std::optional<double> skewness;
  std::optional<SkewDirection> direction;
  std::optional<double> chosen_percentile;
};

std::string_view to_string(StrategyKind kind);
std::optional<StrategyKind> parse_strategy(std::string_view text);
std::string_view to_string(SkewDirection direction);

/// Linear-interpolation ("type 7") quantile. Sorts a copy of `values`.
double quantile(std::span<const double> values, double q);

/// Same rule on an already ascending range; no copy.
double quantile_sorted(std::span<const double> sorted, double q);

/// (Q3 + Q1 - 2 Q2) / (Q3 - Q1); 0 when Q3 == Q1. Always within [-1, 1].
double bowley_skewness(std::span<const double> values);

SkewDirection classify_skew(double skewness, double threshold) noexcept;

AggregationTarget aggregate_target(std::span<const double> scores,
                                   const AggregationStrategy& strategy);

}  // namespace guardlab
