#include "guardlab/synthetic.hpp"

#include <cmath>

#include "guardlab/random.hpp"

namespace guardlab::synthetic {

namespace {

struct Geometry {
  std::size_t dim;
  std::size_t semantic;

  Geometry(std::size_t d, std::size_t k) : dim(d), semantic(k) {
    if (k == 0 || k >= d) {
      throw Error(ErrorKind::InvalidArgument, "need 0 < semantic_dims < dim");
    }
  }

  std::size_t style() const { return dim - semantic; }

  /// Point at signed margin `m` along the label direction, with orthogonal
  /// semantic jitter and isotropic style noise.
  FeatureVector point(Rng& rng, double m, double jitter, double style_noise) const {
    FeatureVector x(dim, 0.0);
    const double u = 1.0 / std::sqrt(static_cast<double>(semantic));
    for (std::size_t k = 0; k < semantic; ++k) x[k] = m * u + jitter * rng.normal();
    for (std::size_t k = semantic; k < dim; ++k) x[k] = style_noise * rng.normal();
    return x;
  }

  void add_style(FeatureVector& x, double amount) const {
    const double v = 1.0 / std::sqrt(static_cast<double>(style()));
    for (std::size_t k = semantic; k < dim; ++k) x[k] += amount * v;
  }

  /// Signed margin of `x` along the label direction.
  double margin(const FeatureVector& x) const {
    const double u = 1.0 / std::sqrt(static_cast<double>(semantic));
    double m = 0.0;
    for (std::size_t k = 0; k < semantic; ++k) m += x[k] * u;
    return m;
  }
};

}  // namespace

Corpus make_corpus(const CorpusConfig& config) {
  const Geometry geo(config.dim, config.semantic_dims);
  Rng rng(config.seed);
  Corpus corpus;
  const auto n_outliers = static_cast<std::size_t>(
      std::llround(config.outlier_fraction * static_cast<double>(config.paraphrases)));

  for (std::size_t i = 0; i < config.n_sets; ++i) {
    const double m = config.center_scale * rng.normal();
    const FeatureVector centre = geo.point(rng, m, 0.5, 0.0);
    auto member = [&] {
      FeatureVector x = centre;
      for (std::size_t k = 0; k < geo.semantic; ++k) x[k] += config.member_noise * rng.normal();
      for (std::size_t k = geo.semantic; k < geo.dim; ++k) x[k] += config.style_noise * rng.normal();
      return x;
    };

    ParaphraseSet set;
    set.id = config.id_prefix + "-" + std::to_string(i);
    set.gold_label = geo.margin(centre) > 0.0 ? Label::Safe : Label::Unsafe;
    set.original.text = set.id + "/original";
    corpus.features.insert_text(set.original.text, member());

    // Outlier slots are drawn without replacement among the paraphrases.
    std::vector<std::size_t> slots(config.paraphrases);
    for (std::size_t j = 0; j < slots.size(); ++j) slots[j] = j;
    rng.shuffle(slots);
    std::vector<bool> is_outlier(config.paraphrases, false);
    for (std::size_t j = 0; j < n_outliers && j < slots.size(); ++j) is_outlier[slots[j]] = true;

    for (std::size_t j = 0; j < config.paraphrases; ++j) {
      Member para;
      para.text = set.id + "/para-" + std::to_string(j);
      FeatureVector x = member();
      if (is_outlier[j]) {
        double shift = config.outlier_shift * rng.uniform(0.7, 1.3);
        if (config.mode == OutlierMode::Mixed && rng.bernoulli(0.5)) shift = -shift;
        geo.add_style(x, shift);
        para.style = "outlier";
      } else {
        para.style = "plain";
      }
      corpus.features.insert_text(para.text, std::move(x));
      set.paraphrases.push_back(std::move(para));
    }
    corpus.sets.push_back(std::move(set));
  }
  return corpus;
}

std::vector<LabeledExample> make_labeled(const LabeledConfig& config) {
  const Geometry geo(config.dim, config.semantic_dims);
  Rng rng(config.seed);
  std::vector<LabeledExample> out;
  out.reserve(config.n);
  for (std::size_t i = 0; i < config.n; ++i) {
    const double m = config.center_scale * rng.normal();
    LabeledExample ex;
    ex.x = geo.point(rng, m, 0.5, config.style_noise);
    const bool safe = geo.margin(ex.x) > 0.0;
    geo.add_style(ex.x, config.spurious_strength * (safe ? 1.0 : -1.0));
    if (rng.bernoulli(config.outlier_fraction)) {
      geo.add_style(ex.x, (rng.bernoulli(0.5) ? 1.0 : -1.0) * config.outlier_shift *
                              rng.uniform(0.7, 1.3));
    }
    const bool flipped = rng.bernoulli(config.label_noise);
    ex.label = (safe != flipped) ? Label::Safe : Label::Unsafe;
    out.push_back(std::move(ex));
  }
  return out;
}

LabeledConfig initial_fit_config(std::size_t dim, std::uint64_t seed) {
  LabeledConfig c;
  c.n = 2000;
  c.dim = dim;
  c.spurious_strength = 1.0;
  c.style_noise = 1.0;
  c.outlier_fraction = 0.0;
  c.label_noise = 0.1;
  c.seed = seed;
  return c;
}

std::vector<LabeledScore> make_calibration_data(std::size_t n, double overconfidence,
                                                std::uint64_t seed, double logit_scale) {
  Rng rng(seed);
  std::vector<LabeledScore> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z = logit_scale * rng.normal();
    const Label gold = rng.bernoulli(sigmoid(z)) ? Label::Safe : Label::Unsafe;
    out.push_back({sigmoid(overconfidence * z), gold});
  }
  return out;
}

}  // namespace guardlab::synthetic
