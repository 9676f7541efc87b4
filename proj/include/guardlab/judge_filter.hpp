#pragma once

// Semantic-equivalence filtering of paraphrase candidates from judge verdicts,
// and threshold sweeps that score the judge against graded similarity.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guardlab/metrics.hpp"

namespace guardlab {

/// System prompt sent to the semantic judge.
inline constexpr std::string_view kJudgePrompt =
    "You are a semantic judge. For each sentence pair, decide if they express the same meaning, "
    "regardless of style. Be wary of negations in the sentences. Respond with 'No' if sentences "
    "are different, otherwise 'Yes' only. Be strict.";

/// Instruction used to request paraphrase candidates.
inline constexpr std::string_view kParaphrasePrompt =
    "Rephrase the following sentence while preserving its original meaning and tone";

enum class Verdict { Yes, No };

struct JudgedPair {
  std::string sentence_a;
  std::string sentence_b;
  Verdict verdict = Verdict::No;
  double verdict_probability = 1.0;
  std::optional<double> gold_similarity;
  /// Set when the judge gave no token probability and 1.0 was assumed.
  bool probability_assumed = false;

  bool operator==(const JudgedPair&) const = default;
};

struct SweepRow {
  double threshold = 0.0;
  ConfusionCounts counts;
  ClassificationMetrics metrics;
};

inline const std::vector<double> kDefaultSimilarityThresholds{0.10, 0.30, 0.50, 0.60,
                                                               0.70, 0.75, 0.80};
inline const std::vector<double> kDefaultProbabilityThresholds{0.50, 0.60, 0.70, 0.80,
                                                                0.90, 0.95, 0.98, 0.99};
inline constexpr double kOperationalSimilarity = 0.80;

/// Accepts Yes verdicts whose probability is >= `prob_threshold`, in order.
std::vector<JudgedPair> two_stage_filter(std::span<const JudgedPair> pairs, double prob_threshold);

/// Gold positive: similarity >= s. Predicted positive: verdict Yes.
std::vector<SweepRow> sweep_similarity_thresholds(std::span<const JudgedPair> pairs,
                                                  std::span<const double> thresholds);

/// Gold fixed at similarity >= `sim_threshold`; predicted positive is
/// two-stage-filter membership at each probability threshold.
std::vector<SweepRow> sweep_probability_thresholds(std::span<const JudgedPair> pairs,
                                                   double sim_threshold,
                                                   std::span<const double> prob_thresholds);

std::optional<Verdict> parse_verdict(std::string_view reply);
std::string_view to_string(Verdict verdict);

nlohmann::json to_json(const JudgedPair& pair);
JudgedPair judged_pair_from_json(const nlohmann::json& j, const std::string& where);
std::vector<JudgedPair> load_judged_pairs(const std::filesystem::path& path);
void save_judged_pairs(std::span<const JudgedPair> pairs, const std::filesystem::path& path);

}  // namespace guardlab
