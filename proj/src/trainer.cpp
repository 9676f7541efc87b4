#include "guardlab/trainer.hpp"

#include <cmath>

#include "guardlab/dataset_io.hpp"
#include "guardlab/random.hpp"

namespace guardlab {

using nlohmann::json;

namespace {

double response(const LinearScorer& scorer, std::span<const double> x) {
  if (x.size() != scorer.weights.size()) {
    throw Error(ErrorKind::DimensionMismatch, "feature dimension " + std::to_string(x.size()) +
                                                  " does not match scorer dimension " +
                                                  std::to_string(scorer.weights.size()));
  }
  double z = scorer.bias;
  for (std::size_t k = 0; k < x.size(); ++k) z += scorer.weights[k] * x[k];
  return z;
}

double sign(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

double paraphrase_std(const ParaphraseSet& set) {
  const auto scores = set.paraphrase_scores();
  if (scores.empty()) return 0.0;
  double mean = 0.0;
  for (double p : scores) mean += p;
  mean /= static_cast<double>(scores.size());
  double sq = 0.0;
  for (double p : scores) sq += (p - mean) * (p - mean);
  return std::sqrt(sq / static_cast<double>(scores.size()));
}

std::vector<FeatureVector> resolve(const ParaphraseSet& set, const FeatureStore& features,
                                   bool with_original) {
  std::vector<FeatureVector> xs;
  xs.reserve(set.paraphrases.size() + 1);
  if (with_original) xs.push_back(features.lookup(set.original.text));
  for (const auto& m : set.paraphrases) xs.push_back(features.lookup(m.text));
  return xs;
}

struct PreparedSet {
  std::vector<FeatureVector> loss_xs;
  std::vector<FeatureVector> target_xs;
};

}  // namespace

void TrainingConfig::validate() const {
  if (!(learning_rate > 0.0) || epochs < 1 || batch_size_sets < 1) {
    throw Error(ErrorKind::InvalidArgument,
                "learning rate, epochs and batch size must all be positive");
  }
  if (min_std < 0.0) throw Error(ErrorKind::InvalidArgument, "min_std must be non-negative");
  strategy.validate();
}

double forward(const LinearScorer& scorer, std::span<const double> x) {
  return sigmoid(response(scorer, x));
}

double anchor_loss(std::span<const double> ps, double target) {
  if (ps.empty()) throw Error(ErrorKind::EmptyInput, "anchor loss of an empty set");
  double total = 0.0;
  for (double p : ps) total += std::abs(p - target);
  return total / static_cast<double>(ps.size());
}

Gradient anchor_loss_gradient(const LinearScorer& scorer, std::span<const FeatureVector> xs,
                              double target) {
  if (xs.empty()) throw Error(ErrorKind::EmptyInput, "anchor loss gradient of an empty set");
  Gradient g{std::vector<double>(scorer.dim(), 0.0), 0.0};
  const auto n = static_cast<double>(xs.size());
  for (const auto& x : xs) {
    const double p = forward(scorer, x);
    // d|p - t|/dz = sign(p - t) * p (1 - p)
    const double dz = sign(p - target) * p * (1.0 - p) / n;
    if (dz == 0.0) continue;
    for (std::size_t k = 0; k < x.size(); ++k) g.weights[k] += dz * x[k];
    g.bias += dz;
  }
  return g;
}

double batch_loss(const LinearScorer& scorer, std::span<const SetBatchItem> batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "empty batch");
  double total = 0.0;
  for (const auto& item : batch) {
    std::vector<double> ps;
    ps.reserve(item.xs.size());
    for (const auto& x : item.xs) ps.push_back(forward(scorer, x));
    total += anchor_loss(ps, item.target);
  }
  return total / static_cast<double>(batch.size());
}

Gradient batch_gradient(const LinearScorer& scorer, std::span<const SetBatchItem> batch) {
  if (batch.empty()) throw Error(ErrorKind::EmptyInput, "empty batch");
  Gradient total{std::vector<double>(scorer.dim(), 0.0), 0.0};
  const auto n = static_cast<double>(batch.size());
  for (const auto& item : batch) {
    const auto g = anchor_loss_gradient(scorer, item.xs, item.target);
    for (std::size_t k = 0; k < total.weights.size(); ++k) total.weights[k] += g.weights[k] / n;
    total.bias += g.bias / n;
  }
  return total;
}

std::vector<ParaphraseSet> filter_training_sets(std::span<const ParaphraseSet> sets,
                                                const TrainingConfig& config) {
  std::vector<ParaphraseSet> kept;
  for (const auto& s : sets) {
    require_scored(s);
    if (s.paraphrases.size() < config.min_set_size) continue;
    const double sd = paraphrase_std(s);
    bool keep = true;
    switch (config.variance_filter) {
      case VarianceFilter::KeepHigh: keep = sd >= config.min_std; break;
      case VarianceFilter::KeepLow: keep = sd < config.min_std; break;
      case VarianceFilter::Off: break;
    }
    if (keep) kept.push_back(s);
  }
  return kept;
}

std::vector<ParaphraseSet> score_sets_with(const LinearScorer& scorer,
                                           std::span<const ParaphraseSet> sets,
                                           const FeatureStore& features) {
  std::vector<ParaphraseSet> out(sets.begin(), sets.end());
  for (auto& s : out) {
    s.original.score = forward(scorer, features.lookup(s.original.text));
    s.original.error.reset();
    for (auto& m : s.paraphrases) {
      m.score = forward(scorer, features.lookup(m.text));
      m.error.reset();
    }
  }
  return out;
}

LinearScorer random_scorer(std::size_t dim, std::uint64_t seed, double scale) {
  Rng rng(seed);
  LinearScorer s;
  s.weights.resize(dim);
  for (auto& w : s.weights) w = scale * rng.normal();
  s.bias = 0.0;
  return s;
}

TrainingResult train(std::span<const ParaphraseSet> sets, const FeatureStore& features,
                     const TrainingConfig& config, const std::optional<LinearScorer>& initial) {
  config.validate();
  if (sets.empty()) throw Error(ErrorKind::EmptyInput, "no paraphrase sets to train on");

  TrainingResult result;
  result.scorer = initial ? *initial : random_scorer(features.dim(), config.seed, config.init_scale);
  if (features.dim() != 0 && result.scorer.dim() != features.dim()) {
    throw Error(ErrorKind::DimensionMismatch, "scorer and feature store dimensions differ");
  }

  // --- Stage 1: filter on the starting scorer's outputs ---
  const auto kept = filter_training_sets(score_sets_with(result.scorer, sets, features), config);
  result.sets_used = kept.size();
  result.sets_filtered_out = sets.size() - kept.size();
  if (kept.empty()) {
    throw Error(ErrorKind::EmptyAfterFilter,
                "all " + std::to_string(sets.size()) + " sets were removed by the set filter");
  }

  std::vector<PreparedSet> prepared;
  prepared.reserve(kept.size());
  for (const auto& s : kept) {
    prepared.push_back({resolve(s, features, config.include_original_in_loss),
                        resolve(s, features, config.include_original_in_target)});
  }

  // --- Stage 2: anchor-loss optimisation ---
  Rng shuffler(config.seed ^ 0x9E3779B97F4A7C15ULL);
  std::vector<std::size_t> order(prepared.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  LinearScorer& scorer = result.scorer;
  std::vector<double> ps;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffler.shuffle(order);
    double epoch_loss = 0.0;
    std::size_t batches = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size_sets) {
      const std::size_t end = std::min(order.size(), start + config.batch_size_sets);
      std::vector<SetBatchItem> batch;
      batch.reserve(end - start);
      for (std::size_t i = start; i < end; ++i) {
        const auto& set = prepared[order[i]];
        ps.clear();
        for (const auto& x : set.target_xs) ps.push_back(forward(scorer, x));
        // The target is a constant of this step; no gradient flows through it.
        const double target = aggregate_target(ps, config.strategy).target;
        batch.push_back({set.loss_xs, target});
      }
      epoch_loss += batch_loss(scorer, batch);
      const auto g = batch_gradient(scorer, batch);
      for (std::size_t k = 0; k < scorer.weights.size(); ++k) {
        scorer.weights[k] -= config.learning_rate * g.weights[k];
      }
      scorer.bias -= config.learning_rate * g.bias;
      ++batches;
      ++result.steps;
    }
    result.history.push_back(epoch_loss / static_cast<double>(batches));
  }
  return result;
}

EvaluationBundle evaluate(const LinearScorer& scorer, std::span<const ParaphraseSet> eval_sets,
                          const FeatureStore& features, std::span<const LabeledExample> labeled,
                          std::size_t ece_bins) {
  EvaluationBundle out;
  const auto scored = score_sets_with(scorer, eval_sets, features);
  out.lfr = binned_lfr(scored);
  out.split = threshold_split_lfr(scored);
  std::vector<DispersionReport> per_set;
  per_set.reserve(scored.size());
  for (const auto& s : scored) per_set.push_back(dispersion(s));
  out.dispersion = summarize_dispersion(per_set);

  out.labeled = labeled.size();
  if (labeled.empty()) return out;
  ConfusionCounts unsafe_positive;
  std::vector<Prediction> preds;
  preds.reserve(labeled.size());
  for (const auto& ex : labeled) {
    const double p = forward(scorer, ex.x);
    const bool predicted_unsafe = label_of(p) == Label::Unsafe;
    const bool gold_unsafe = ex.label == Label::Unsafe;
    if (predicted_unsafe && gold_unsafe) ++unsafe_positive.tp;
    else if (predicted_unsafe) ++unsafe_positive.fp;
    else if (gold_unsafe) ++unsafe_positive.fn;
    else ++unsafe_positive.tn;
    preds.push_back(prediction_from_score(p, ex.label));
  }
  const auto m = classification_metrics(unsafe_positive);
  out.accuracy = m.accuracy;
  out.f1 = m.f1;
  out.ece = ece(preds, ece_bins);
  return out;
}

LinearScorer fit_logistic_regression(std::span<const LabeledExample> data,
                                     const LogisticFitOptions& options) {
  if (data.empty()) throw Error(ErrorKind::EmptyInput, "no labeled examples to fit");
  const std::size_t d = data.front().x.size();
  LinearScorer s{std::vector<double>(d, 0.0), 0.0};
  const auto n = static_cast<double>(data.size());
  std::vector<double> gw(d);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    std::fill(gw.begin(), gw.end(), 0.0);
    double gb = 0.0;
    for (const auto& ex : data) {
      const double y = ex.label == Label::Safe ? 1.0 : 0.0;
      const double r = (forward(s, ex.x) - y) / n;
      for (std::size_t k = 0; k < d; ++k) gw[k] += r * ex.x[k];
      gb += r;
    }
    for (std::size_t k = 0; k < d; ++k) {
      s.weights[k] -= options.learning_rate * (gw[k] + options.l2 * s.weights[k]);
    }
    s.bias -= options.learning_rate * gb;
  }
  return s;
}

json to_json(const LinearScorer& scorer) {
  json j = json::object();
  j["d"] = scorer.dim();
  j["weights"] = scorer.weights;
  j["bias"] = scorer.bias;
  return j;
}

LinearScorer scorer_from_json(const json& j) {
  if (!j.is_object() || !j.contains("d") || !j.contains("weights") || !j.contains("bias") ||
      !j["weights"].is_array() || !j["bias"].is_number() || !j["d"].is_number_unsigned()) {
    throw Error(ErrorKind::Schema, "scorer JSON must be {\"d\": int, \"weights\": [...], \"bias\": real}");
  }
  LinearScorer s;
  for (const auto& w : j["weights"]) {
    if (!w.is_number()) throw Error(ErrorKind::Schema, "scorer weights must be numbers");
    s.weights.push_back(w.get<double>());
  }
  s.bias = j["bias"].get<double>();
  if (j["d"].get<std::size_t>() != s.weights.size()) {
    throw Error(ErrorKind::DimensionMismatch, "scorer 'd' does not match the weight count");
  }
  return s;
}

LinearScorer load_scorer(const std::filesystem::path& path) {
  try {
    return scorer_from_json(json::parse(read_file(path)));
  } catch (const json::parse_error& e) {
    throw Error(ErrorKind::Parse, path.string() + ": " + e.what());
  }
}

void save_scorer(const LinearScorer& scorer, const std::filesystem::path& path) {
  write_file_atomic(path, to_json(scorer).dump(2) + "\n");
}

json to_json(const LabeledExample& example) {
  json j = json::object();
  j["vector"] = example.x;
  j["label"] = std::string(to_string(example.label));
  return j;
}

std::vector<LabeledExample> load_labeled_examples(const std::filesystem::path& path) {
  std::vector<LabeledExample> out;
  std::size_t dim = 0;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const std::string where = path.string() + ":" + std::to_string(line);
    auto vec = j.find("vector");
    auto label = j.find("label");
    if (vec == j.end() || !vec->is_array() || label == j.end() || !label->is_string()) {
      throw Error(ErrorKind::Schema, where + ": expected {\"vector\": [...], \"label\": ...}");
    }
    LabeledExample ex;
    for (const auto& x : *vec) {
      if (!x.is_number()) throw Error(ErrorKind::Schema, where + ": vector entries must be numbers");
      ex.x.push_back(x.get<double>());
    }
    auto parsed = parse_label(label->get<std::string>());
    if (!parsed) throw Error(ErrorKind::Schema, where + ": label must be safe|unsafe");
    ex.label = *parsed;
    if (dim == 0) dim = ex.x.size();
    if (ex.x.size() != dim) throw Error(ErrorKind::DimensionMismatch, where + ": inconsistent vector length");
    out.push_back(std::move(ex));
  });
  return out;
}

void save_labeled_examples(std::span<const LabeledExample> examples,
                           const std::filesystem::path& path) {
  std::string out;
  for (const auto& ex : examples) {
    out += to_json(ex).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace guardlab
