#pragma once

// Paraphrase-consistency training of a differentiable scorer: variance-based
// set filtering, per-set aggregated targets, the mean-absolute-deviation
// anchor loss and before/after evaluation.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "guardlab/aggregate.hpp"
#include "guardlab/features.hpp"
#include "guardlab/metrics.hpp"

namespace guardlab {

/// score(x) = sigmoid(weights . x + bias).
struct LinearScorer {
  std::vector<double> weights;
  double bias = 0.0;

  std::size_t dim() const noexcept { return weights.size(); }
  bool operator==(const LinearScorer&) const = default;
};

struct Gradient {
  std::vector<double> weights;
  double bias = 0.0;
};

enum class VarianceFilter { KeepHigh, KeepLow, Off };

struct TrainingConfig {
  double learning_rate = 1e-3;
  std::size_t epochs = 4;
  std::size_t batch_size_sets = 4;
  AggregationStrategy strategy{};
  std::size_t min_set_size = 3;
  double min_std = 0.01;
  VarianceFilter variance_filter = VarianceFilter::KeepHigh;
  bool include_original_in_target = true;
  bool include_original_in_loss = true;
  std::uint64_t seed = 7;
  /// Scale of the random initial weights when no starting scorer is given.
  double init_scale = 0.01;

  void validate() const;
};

/// Members of one set resolved to features, plus its (detached) target.
struct SetBatchItem {
  std::vector<FeatureVector> xs;
  double target = 0.5;
};

struct TrainingResult {
  LinearScorer scorer;
  /// Mean batch loss per epoch, measured before each step.
  std::vector<double> history;
  std::size_t sets_used = 0;
  std::size_t sets_filtered_out = 0;
  std::size_t steps = 0;
};

struct LabeledExample {
  FeatureVector x;
  Label label = Label::Safe;
};

struct EvaluationBundle {
  BinnedLfrReport lfr;
  ThresholdLfrReport split;
  DispersionSummary dispersion;
  std::size_t labeled = 0;
  std::optional<double> accuracy;
  /// Unsafe is the positive class.
  std::optional<double> f1;
  std::optional<double> ece;
};

struct LogisticFitOptions {
  double learning_rate = 0.5;
  std::size_t iterations = 500;
  double l2 = 1e-3;
};

double forward(const LinearScorer& scorer, std::span<const double> x);

double anchor_loss(std::span<const double> ps, double target);

/// Subgradient of the anchor loss w.r.t. (weights, bias) with the target held
/// constant; sign(0) = 0.
Gradient anchor_loss_gradient(const LinearScorer& scorer, std::span<const FeatureVector> xs,
                              double target);

/// Mean anchor loss / gradient over the sets of one batch.
double batch_loss(const LinearScorer& scorer, std::span<const SetBatchItem> batch);
Gradient batch_gradient(const LinearScorer& scorer, std::span<const SetBatchItem> batch);

/// Keeps sets with >= min_set_size paraphrases whose paraphrase-score std
/// passes the variance filter. Input order is preserved.
std::vector<ParaphraseSet> filter_training_sets(std::span<const ParaphraseSet> sets,
                                                const TrainingConfig& config);

/// Copies `sets` with every member scored by `scorer`.
std::vector<ParaphraseSet> score_sets_with(const LinearScorer& scorer,
                                           std::span<const ParaphraseSet> sets,
                                           const FeatureStore& features);

LinearScorer random_scorer(std::size_t dim, std::uint64_t seed, double scale);

/// Scores the sets with `initial` (or a seeded random scorer), filters them and
/// runs the anchor-loss loop with plain gradient descent.
TrainingResult train(std::span<const ParaphraseSet> sets, const FeatureStore& features,
                     const TrainingConfig& config,
                     const std::optional<LinearScorer>& initial = std::nullopt);

EvaluationBundle evaluate(const LinearScorer& scorer, std::span<const ParaphraseSet> eval_sets,
                          const FeatureStore& features, std::span<const LabeledExample> labeled,
                          std::size_t ece_bins = kDefaultEceBins);

/// Full-batch L2-regularized logistic regression (Safe = 1).
LinearScorer fit_logistic_regression(std::span<const LabeledExample> data,
                                     const LogisticFitOptions& options = {});

nlohmann::json to_json(const LinearScorer& scorer);
LinearScorer scorer_from_json(const nlohmann::json& j);
LinearScorer load_scorer(const std::filesystem::path& path);
void save_scorer(const LinearScorer& scorer, const std::filesystem::path& path);

nlohmann::json to_json(const LabeledExample& example);
std::vector<LabeledExample> load_labeled_examples(const std::filesystem::path& path);
void save_labeled_examples(std::span<const LabeledExample> examples,
                           const std::filesystem::path& path);

}  // namespace guardlab
