#pragma once

// Temperature scaling for binary safety scores.

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "guardlab/core.hpp"
#include "guardlab/metrics.hpp"

#include <json.hpp>

namespace guardlab {

class Temperature {
 public:
  /// Throws Error{InvalidArgument} unless t is finite and positive.
  explicit Temperature(double t);
  double value() const noexcept { return t_; }

 private:
  double t_;
};

struct LabeledScore {
  double score = 0.0;
  Label gold = Label::Safe;
};

struct CalibrationOptions {
  double t_min = 0.05;
  double t_max = 5.0;
  std::size_t ece_bins = kDefaultEceBins;
  double logit_eps = kDefaultLogitEps;
};

struct CalibrationResult {
  double temperature = 1.0;
  bool at_upper_bound = false;
  bool at_lower_bound = false;
  double ece_before = 0.0;
  double ece_after = 0.0;
  double bce_before = 0.0;
  double bce_after = 0.0;
  std::size_t n_validation = 0;
  std::vector<ReliabilityBin> reliability_before;
  std::vector<ReliabilityBin> reliability_after;
};

/// sigmoid(logit(p) / t). Never moves a score across 0.5.
double apply_temperature(double p, Temperature t, double eps = kDefaultLogitEps);

/// Mean binary cross-entropy of the tempered scores against "gold is Safe".
double temperature_bce(std::span<const LabeledScore> data, double t,
                       double eps = kDefaultLogitEps);

/// Minimizes temperature_bce over [t_min, t_max]. The objective is convex in
/// 1/t, so a safeguarded Newton iteration on the inverse temperature finds
/// the global minimum or lands exactly on a bound.
CalibrationResult fit_temperature(std::span<const LabeledScore> validation,
                                  const CalibrationOptions& options = {});

struct LabelInvariance {
  std::size_t checked = 0;
  std::size_t flips = 0;
};

LabelInvariance verify_label_invariance(std::span<const double> scores, Temperature t);

/// Validation file: JSONL lines {"score": p, "gold_label": "safe"|"unsafe"}.
nlohmann::json to_json(const LabeledScore& item);
std::vector<LabeledScore> load_labeled_scores(const std::filesystem::path& path);
void save_labeled_scores(std::span<const LabeledScore> items, const std::filesystem::path& path);

}  // namespace guardlab
