#pragma once

// Seeded synthetic corpora in feature space. Each paraphrase set is a tight
// cluster around a semantic centre; a fraction of members ("outliers") are
// displaced along a style direction that carries no meaning but that an
// initial scorer fit on spuriously correlated data has learned to use.

#include <cstdint>
#include <string>
#include <vector>

#include "guardlab/calibrate.hpp"
#include "guardlab/core.hpp"
#include "guardlab/features.hpp"
#include "guardlab/trainer.hpp"

namespace guardlab::synthetic {

enum class OutlierMode { Mixed, Upward };

struct CorpusConfig {
  std::size_t n_sets = 200;
  std::size_t paraphrases = 9;
  std::size_t dim = 8;
  std::size_t semantic_dims = 4;
  double outlier_fraction = 0.2;
  /// Std of set centres along the label-determining direction.
  double center_scale = 1.5;
  double member_noise = 0.05;
  double style_noise = 0.1;
  double outlier_shift = 3.0;
  OutlierMode mode = OutlierMode::Mixed;
  std::uint64_t seed = 1;
  std::string id_prefix = "s";
};

struct Corpus {
  std::vector<ParaphraseSet> sets;
  FeatureStore features;
};

Corpus make_corpus(const CorpusConfig& config);

struct LabeledConfig {
  std::size_t n = 1000;
  std::size_t dim = 8;
  std::size_t semantic_dims = 4;
  double center_scale = 1.5;
  /// Label-correlated style offset; 0 gives member-like points.
  double spurious_strength = 0.0;
  double outlier_fraction = 0.2;
  double outlier_shift = 3.0;
  double style_noise = 0.1;
  double label_noise = 0.0;
  std::uint64_t seed = 2;
};

std::vector<LabeledExample> make_labeled(const LabeledConfig& config);

/// Examples with a spurious style/label correlation and noisy labels, used to
/// fit the starting scorer by plain logistic regression.
LabeledConfig initial_fit_config(std::size_t dim, std::uint64_t seed);

/// Gold ~ Bernoulli(sigmoid(z)), score = sigmoid(overconfidence * z).
std::vector<LabeledScore> make_calibration_data(std::size_t n, double overconfidence,
                                                std::uint64_t seed, double logit_scale = 2.0);

}  // namespace guardlab::synthetic
