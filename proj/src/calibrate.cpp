#include "guardlab/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include "guardlab/dataset_io.hpp"

namespace guardlab {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

struct Prepared {
  std::vector<double> z;
  std::vector<double> y;
};

Prepared prepare(std::span<const LabeledScore> data, double eps) {
  Prepared out;
  out.z.reserve(data.size());
  out.y.reserve(data.size());
  for (const auto& d : data) {
    check_score(d.score);
    out.z.push_back(logit(d.score, eps));
    out.y.push_back(d.gold == Label::Safe ? 1.0 : 0.0);
  }
  return out;
}

// Mean BCE at inverse temperature s, via the stable softplus form.
double objective(const Prepared& d, double s) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.z.size(); ++i) total += softplus(s * d.z[i]) - d.y[i] * s * d.z[i];
  return total / static_cast<double>(d.z.size());
}

double slope(const Prepared& d, double s) {
  double total = 0.0;
  for (std::size_t i = 0; i < d.z.size(); ++i) total += (sigmoid(s * d.z[i]) - d.y[i]) * d.z[i];
  return total / static_cast<double>(d.z.size());
}

double curvature(const Prepared& d, double s) {
  double total = 0.0;
  for (double z : d.z) {
    const double p = sigmoid(s * z);
    total += p * (1.0 - p) * z * z;
  }
  return total / static_cast<double>(d.z.size());
}

std::vector<Prediction> predictions(std::span<const LabeledScore> data, double t, double eps) {
  std::vector<Prediction> out;
  out.reserve(data.size());
  const Temperature temp(t);
  for (const auto& d : data) out.push_back(prediction_from_score(apply_temperature(d.score, temp, eps), d.gold));
  return out;
}

}  // namespace

Temperature::Temperature(double t) : t_(t) {
  if (!(std::isfinite(t) && t > 0.0)) {
    throw Error(ErrorKind::InvalidArgument, "temperature must be finite and positive");
  }
}

double apply_temperature(double p, Temperature t, double eps) {
  check_score(p);
  const double q = sigmoid(logit(p, eps) / t.value());
  // A logit within rounding of zero can come back as exactly 0.5.
  if (p < kDecisionThreshold && q >= kDecisionThreshold) return std::nextafter(kDecisionThreshold, 0.0);
  return q;
}

double temperature_bce(std::span<const LabeledScore> data, double t, double eps) {
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "BCE of an empty validation set");
  const Temperature temp(t);
  return objective(prepare(data, eps), 1.0 / temp.value());
}

CalibrationResult fit_temperature(std::span<const LabeledScore> validation,
                                  const CalibrationOptions& options) {
  if (validation.empty()) throw Error(ErrorKind::EmptyInput, "empty validation set");
  if (!(options.t_min > 0.0 && options.t_min < options.t_max && std::isfinite(options.t_max))) {
    throw Error(ErrorKind::InvalidArgument, "temperature bounds must satisfy 0 < t_min < t_max");
  }
  const bool has_safe = std::any_of(validation.begin(), validation.end(),
                                    [](const LabeledScore& d) { return d.gold == Label::Safe; });
  const bool has_unsafe = std::any_of(validation.begin(), validation.end(),
                                      [](const LabeledScore& d) { return d.gold == Label::Unsafe; });
  if (!has_safe || !has_unsafe) {
    throw Error(ErrorKind::SingleClass, "validation data must contain both safe and unsafe examples");
  }

  const auto data = prepare(validation, options.logit_eps);
  const double s_lo = 1.0 / options.t_max;
  const double s_hi = 1.0 / options.t_min;

  CalibrationResult result;
  result.n_validation = validation.size();

  double t = 1.0;
  if (slope(data, s_lo) >= 0.0) {
    t = options.t_max;
    result.at_upper_bound = true;
  } else if (slope(data, s_hi) <= 0.0) {
    t = options.t_min;
    result.at_lower_bound = true;
  } else {
    double a = s_lo;
    double b = s_hi;
    double s = 0.5 * (a + b);
    for (int iter = 0; iter < 200; ++iter) {
      const double g = slope(data, s);
      if (g == 0.0) break;
      if (g < 0.0) a = s; else b = s;
      const double h = curvature(data, s);
      double next = h > 0.0 ? s - g / h : 0.5 * (a + b);
      if (!(next > a && next < b)) next = 0.5 * (a + b);
      if (std::abs(next - s) <= 1e-15 * std::max(1.0, std::abs(s)) || b - a <= 1e-15 * b) {
        s = next;
        break;
      }
      s = next;
    }
    t = std::clamp(1.0 / s, options.t_min, options.t_max);
  }
  result.temperature = t;

  result.bce_before = objective(data, 1.0);
  result.bce_after = objective(data, 1.0 / t);
  const auto before = predictions(validation, 1.0, options.logit_eps);
  const auto after = predictions(validation, t, options.logit_eps);
  result.reliability_before = reliability_table(before, options.ece_bins);
  result.reliability_after = reliability_table(after, options.ece_bins);
  result.ece_before = ece_from_table(result.reliability_before);
  result.ece_after = ece_from_table(result.reliability_after);
  return result;
}

LabelInvariance verify_label_invariance(std::span<const double> scores, Temperature t) {
  LabelInvariance out;
  for (double p : scores) {
    ++out.checked;
    if (label_of(p) != label_of(apply_temperature(p, t))) ++out.flips;
  }
  return out;
}

nlohmann::json to_json(const LabeledScore& item) {
  return {{"score", item.score}, {"gold_label", std::string(to_string(item.gold))}};
}

std::vector<LabeledScore> load_labeled_scores(const std::filesystem::path& path) {
  std::vector<LabeledScore> out;
  const std::string source = path.string();
  for_each_jsonl(path, [&](const nlohmann::json& j, std::size_t line) {
    const std::string where = source + ":" + std::to_string(line);
    if (!j.is_object()) throw Error(ErrorKind::Schema, where + ": expected an object");
    auto s = j.find("score");
    if (s == j.end() || !s->is_number()) throw Error(ErrorKind::Schema, where + ": 'score' must be a number");
    auto g = j.find("gold_label");
    if (g == j.end() || !g->is_string()) throw Error(ErrorKind::Schema, where + ": 'gold_label' is required");
    auto label = parse_label(g->get<std::string>());
    if (!label) throw Error(ErrorKind::Schema, where + ": 'gold_label' must be safe|unsafe");
    const double p = s->get<double>();
    if (!is_valid_score(p)) throw Error(ErrorKind::Schema, where + ": 'score' outside [0, 1]");
    out.push_back({p, *label});
  });
  if (out.empty()) throw Error(ErrorKind::EmptyInput, source + ": no validation records");
  return out;
}

void save_labeled_scores(std::span<const LabeledScore> items, const std::filesystem::path& path) {
  std::string text;
  for (const auto& item : items) text += to_json(item).dump() + "\n";
  write_file_atomic(path, text);
}

}  // namespace guardlab
