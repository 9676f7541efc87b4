#pragma once

// Evaluation metrics: label flip rates (binned and threshold-split), score
// dispersion, confusion-matrix metrics and expected calibration error.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "guardlab/core.hpp"

namespace guardlab {

/// Flip tally for one group of sets.
struct FlipBin {
  std::size_t sets = 0;
  std::size_t flipping = 0;

  /// Absent for an empty bin (reported as N/A).
  std::optional<double> rate() const;
};

struct BinnedLfrReport {
  FlipBin unsafe;
  FlipBin ambiguous;
  FlipBin safe;

  std::optional<double> lfr_unsafe() const { return unsafe.rate(); }
  std::optional<double> lfr_ambiguous() const { return ambiguous.rate(); }
  std::optional<double> lfr_safe() const { return safe.rate(); }
  /// Unweighted mean over the bins that contain sets; 0 when all are empty.
  double average_lfr() const;
  std::size_t total_sets() const { return unsafe.sets + ambiguous.sets + safe.sets; }
};

struct ThresholdLfrReport {
  FlipBin below_half;
  FlipBin at_or_above_half;

  std::optional<double> lfr_below_half() const { return below_half.rate(); }
  std::optional<double> lfr_at_or_above_half() const { return at_or_above_half.rate(); }
};

struct DispersionReport {
  double mean = 0.0;
  double std = 0.0;  // population
  double max_delta = 0.0;
};

/// Corpus-level roll-up of per-set dispersion (fixed left-to-right fold).
struct DispersionSummary {
  std::size_t sets = 0;
  double mean_score = 0.0;
  double mean_std = 0.0;
  double mean_max_delta = 0.0;
  double max_delta = 0.0;
};

/// One row of the per-paraphrase pivot: the same paraphrase text scored under
/// many prompts.
struct ParaphrasePivotRow {
  std::string text;
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double max_delta = 0.0;
};

struct ConfusionCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const { return tp + fp + fn + tn; }
  bool operator==(const ConfusionCounts&) const = default;
};

/// Metrics whose denominator is zero are absent rather than 0.
struct ClassificationMetrics {
  std::optional<double> precision;
  std::optional<double> recall;
  std::optional<double> f1;
  std::optional<double> accuracy;
};

struct Prediction {
  double confidence = 0.0;
  bool correct = false;
};

struct ReliabilityBin {
  double lower = 0.0;
  double upper = 0.0;
  std::size_t count = 0;
  std::optional<double> avg_confidence;
  std::optional<double> accuracy;
};

inline constexpr std::size_t kDefaultEceBins = 10;

/// True iff some paraphrase's label differs from the original's.
bool set_flips(const ParaphraseSet& set);

BinnedLfrReport binned_lfr(std::span<const ParaphraseSet> sets);
ThresholdLfrReport threshold_split_lfr(std::span<const ParaphraseSet> sets);

/// Unweighted mean of the present rates (used to cross-check published tables).
double average_of_present(std::span<const std::optional<double>> rates);

DispersionReport dispersion(const ParaphraseSet& set);
DispersionSummary summarize_dispersion(std::span<const DispersionReport> per_set);

/// Groups |p0 - pi| by paraphrase text across sets. With `safe_originals_only`
/// only sets whose original scored >= 0.5 contribute.
std::vector<ParaphrasePivotRow> paraphrase_pivot(std::span<const ParaphraseSet> sets,
                                                 bool safe_originals_only = false);

ClassificationMetrics classification_metrics(const ConfusionCounts& c);

/// Max-confidence convention: confidence = max(p, 1 - p), correct when the
/// thresholded label matches the gold label.
Prediction prediction_from_score(double p, Label gold);

std::vector<ReliabilityBin> reliability_table(std::span<const Prediction> predictions,
                                              std::size_t m_bins = kDefaultEceBins);
double ece(std::span<const Prediction> predictions, std::size_t m_bins = kDefaultEceBins);
/// Weighted gap sum over an existing table.
double ece_from_table(std::span<const ReliabilityBin> table);

}  // namespace guardlab
