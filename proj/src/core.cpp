#include "guardlab/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace guardlab {

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Schema: return "schema error";
    case ErrorKind::PartialScores: return "partial scores";
    case ErrorKind::Unscored: return "unscored set";
    case ErrorKind::EmptyInput: return "empty input";
    case ErrorKind::InvalidArgument: return "invalid argument";
    case ErrorKind::DimensionMismatch: return "dimension mismatch";
    case ErrorKind::SingleClass: return "single-class validation data";
    case ErrorKind::MissingFeature: return "missing feature vector";
    case ErrorKind::MissingGold: return "missing gold similarity";
    case ErrorKind::EmptyAfterFilter: return "no training sets left after filtering";
    case ErrorKind::Io: return "i/o error";
    case ErrorKind::Transport: return "transport error";
    case ErrorKind::Auth: return "auth error";
    case ErrorKind::Payload: return "payload error";
  }
  return "error";
}

std::string_view to_string(Label label) {
  return label == Label::Safe ? "safe" : "unsafe";
}

std::string_view to_string(ConfidenceBin bin) {
  switch (bin) {
    case ConfidenceBin::ConfidentlyUnsafe: return "unsafe";
    case ConfidenceBin::Ambiguous: return "ambiguous";
    case ConfidenceBin::ConfidentlySafe: return "safe";
  }
  return "?";
}

std::optional<Label> parse_label(std::string_view text) {
  std::string lowered(text);
  std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lowered == "safe") return Label::Safe;
  if (lowered == "unsafe") return Label::Unsafe;
  return std::nullopt;
}

bool is_valid_score(double p) noexcept {
  return std::isfinite(p) && p >= 0.0 && p <= 1.0;
}

void check_score(double p, std::string_view what) {
  if (!is_valid_score(p)) {
    throw Error(ErrorKind::InvalidArgument,
                std::string(what) + " must be a probability in [0, 1], got " + std::to_string(p));
  }
}

Label label_of(double p) noexcept {
  return p >= kDecisionThreshold ? Label::Safe : Label::Unsafe;
}

ConfidenceBin bin_of(double p) noexcept {
  if (p <= 0.25) return ConfidenceBin::ConfidentlyUnsafe;
  if (p >= 0.75) return ConfidenceBin::ConfidentlySafe;
  return ConfidenceBin::Ambiguous;
}

double logit(double p, double eps) {
  if (!(eps > 0.0 && eps < 0.5)) {
    throw Error(ErrorKind::InvalidArgument, "logit eps must lie in (0, 0.5)");
  }
  const double clamped = std::clamp(p, eps, 1.0 - eps);
  return std::log(clamped / (1.0 - clamped));
}

double sigmoid(double z) noexcept {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

bool ParaphraseSet::fully_scored() const noexcept {
  return original.score.has_value() &&
         std::all_of(paraphrases.begin(), paraphrases.end(),
                     [](const Member& m) { return m.score.has_value(); });
}

bool ParaphraseSet::any_scored() const noexcept {
  return original.score.has_value() ||
         std::any_of(paraphrases.begin(), paraphrases.end(),
                     [](const Member& m) { return m.score.has_value(); });
}

std::vector<double> ParaphraseSet::paraphrase_scores() const {
  require_scored(*this);
  std::vector<double> out;
  out.reserve(paraphrases.size());
  for (const auto& m : paraphrases) out.push_back(*m.score);
  return out;
}

std::vector<double> ParaphraseSet::all_scores() const {
  require_scored(*this);
  std::vector<double> out;
  out.reserve(paraphrases.size() + 1);
  out.push_back(*original.score);
  for (const auto& m : paraphrases) out.push_back(*m.score);
  return out;
}

void require_scored(const ParaphraseSet& set) {
  if (!set.fully_scored()) {
    throw Error(ErrorKind::Unscored, "set '" + set.id + "' has members without a score");
  }
}

}  // namespace guardlab
