#pragma once

// Shared domain types for guard-model robustness analysis: safety scores,
// labels, confidence bins, paraphrase sets and the logit transform.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace guardlab {

inline constexpr double kDecisionThreshold = 0.5;
inline constexpr double kDefaultLogitEps = 1e-6;

enum class ErrorKind {
  Parse,
  Schema,
  PartialScores,
  Unscored,
  EmptyInput,
  InvalidArgument,
  DimensionMismatch,
  SingleClass,
  MissingFeature,
  MissingGold,
  EmptyAfterFilter,
  Io,
  Transport,
  Auth,
  Payload,
};

std::string_view to_string(ErrorKind kind);

/// Every recoverable failure in the toolkit. The kind drives CLI exit codes.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

enum class Label { Safe, Unsafe };

enum class ConfidenceBin { ConfidentlyUnsafe, Ambiguous, ConfidentlySafe };

std::string_view to_string(Label label);
std::string_view to_string(ConfidenceBin bin);
std::optional<Label> parse_label(std::string_view text);

/// True when `p` is a finite probability in [0, 1].
bool is_valid_score(double p) noexcept;

/// Throws Error{InvalidArgument} unless `p` is a valid probability.
void check_score(double p, std::string_view what = "score");

/// Safe iff p >= 0.5. The tie at exactly 0.5 is Safe.
Label label_of(double p) noexcept;

/// [0, 0.25] unsafe, (0.25, 0.75) ambiguous, [0.75, 1] safe.
ConfidenceBin bin_of(double p) noexcept;

double logit(double p, double eps = kDefaultLogitEps);
double sigmoid(double z) noexcept;

struct Member {
  std::string text;
  std::optional<double> score;
  std::optional<std::string> style;
  /// Annotation left by the scoring client when this member could not be scored.
  std::optional<std::string> error;

  bool operator==(const Member&) const = default;
};

/// An original response plus its meaning-preserving variants.
struct ParaphraseSet {
  std::string id;
  std::optional<std::string> prompt;
  Member original;
  std::vector<Member> paraphrases;
  std::optional<Label> gold_label;

  bool operator==(const ParaphraseSet&) const = default;

  bool fully_scored() const noexcept;
  bool any_scored() const noexcept;
  std::vector<double> paraphrase_scores() const;
  /// Original first, then paraphrases in order.
  std::vector<double> all_scores() const;
};

/// Throws Error{Unscored} naming the set id when any member lacks a score.
void require_scored(const ParaphraseSet& set);

}  // namespace guardlab
