#include "guardlab/aggregate.hpp"

#include <algorithm>
#include <cmath>

namespace guardlab {

namespace {

std::vector<double> sorted_copy(std::span<const double> values) {
  std::vector<double> v(values.begin(), values.end());
  std::sort(v.begin(), v.end());
  return v;
}

void require_non_empty(std::span<const double> values, const char* what) {
  if (values.empty()) throw Error(ErrorKind::EmptyInput, std::string(what) + " of an empty list");
}

}  // namespace

void AggregationStrategy::validate() const {
  const auto& p = percentiles;
  if (!(0.0 <= p.right_skew && p.right_skew <= p.symmetric && p.symmetric <= p.left_skew &&
        p.left_skew <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument,
                "skew percentiles must satisfy 0 <= right <= symmetric <= left <= 1");
  }
  if (!(skew_threshold > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "skew threshold must be positive");
  }
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::Mean: return "mean";
    case StrategyKind::Median: return "median";
    case StrategyKind::SkewAware: return "skew";
  }
  return "?";
}

std::optional<StrategyKind> parse_strategy(std::string_view text) {
  if (text == "mean") return StrategyKind::Mean;
  if (text == "median") return StrategyKind::Median;
  if (text == "skew" || text == "skew-aware") return StrategyKind::SkewAware;
  return std::nullopt;
}

std::string_view to_string(SkewDirection direction) {
  switch (direction) {
    case SkewDirection::Left: return "left";
    case SkewDirection::Symmetric: return "symmetric";
    case SkewDirection::Right: return "right";
  }
  return "?";
}

double quantile_sorted(std::span<const double> sorted, double q) {
  require_non_empty(sorted, "quantile");
  if (!(q >= 0.0 && q <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "quantile level must lie in [0, 1]");
  }
  const double h = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = h - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double quantile(std::span<const double> values, double q) {
  require_non_empty(values, "quantile");
  const auto v = sorted_copy(values);
  return quantile_sorted(v, q);
}

double bowley_skewness(std::span<const double> values) {
  require_non_empty(values, "skewness");
  const auto v = sorted_copy(values);
  const double q1 = quantile_sorted(v, 0.25);
  const double q2 = quantile_sorted(v, 0.50);
  const double q3 = quantile_sorted(v, 0.75);
  const double spread = q3 - q1;
  if (!(spread > 0.0)) return 0.0;
  return std::clamp((q3 + q1 - 2.0 * q2) / spread, -1.0, 1.0);
}

SkewDirection classify_skew(double skewness, double threshold) noexcept {
  if (skewness > threshold) return SkewDirection::Right;
  if (skewness < -threshold) return SkewDirection::Left;
  return SkewDirection::Symmetric;
}

AggregationTarget aggregate_target(std::span<const double> scores,
                                   const AggregationStrategy& strategy) {
  require_non_empty(scores, "aggregate");
  for (double p : scores) check_score(p);

  AggregationTarget out;
  out.strategy = strategy.kind;
  const auto sorted = sorted_copy(scores);

  switch (strategy.kind) {
    case StrategyKind::Mean: {
      // Summing in sorted order makes the result independent of input order.
      double sum = 0.0;
      for (double p : sorted) sum += p;
      // Rounding can push the mean of identical values one ulp outside them.
      out.target = std::clamp(sum / static_cast<double>(scores.size()), sorted.front(),
                              sorted.back());
      return out;
    }
    case StrategyKind::Median:
      out.target = quantile_sorted(sorted, 0.5);
      out.chosen_percentile = 0.5;
      return out;
    case StrategyKind::SkewAware:
      break;
  }

  strategy.validate();
  std::vector<double> logits;
  logits.reserve(sorted.size());
  for (double p : sorted) logits.push_back(logit(p, strategy.logit_eps));

  // One or two members carry no shape information.
  const double skew = sorted.size() <= 2 ? 0.0 : bowley_skewness(logits);
  const SkewDirection direction = classify_skew(skew, strategy.skew_threshold);
  double level = strategy.percentiles.symmetric;
  if (direction == SkewDirection::Right) level = strategy.percentiles.right_skew;
  if (direction == SkewDirection::Left) level = strategy.percentiles.left_skew;

  double target = 0.0;
  if (strategy.scale == PercentileScale::Probability) {
    target = quantile_sorted(sorted, level);
  } else {
    // logit is monotone, so the sorted order carries over.
    target = sigmoid(quantile_sorted(logits, level));
  }
  out.target = std::clamp(target, sorted.front(), sorted.back());
  out.skewness = skew;
  out.direction = direction;
  out.chosen_percentile = level;
  return out;
}

}  // namespace guardlab
