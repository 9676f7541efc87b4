#include "guardlab/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <optional>
#include <ostream>
#include <set>

#include <CLI11.hpp>
#include <json.hpp>

#include "guardlab/aggregate.hpp"
#include "guardlab/calibrate.hpp"
#include "guardlab/dataset_io.hpp"
#include "guardlab/features.hpp"
#include "guardlab/judge_filter.hpp"
#include "guardlab/manifest.hpp"
#include "guardlab/metrics.hpp"
#include "guardlab/parallel.hpp"
#include "guardlab/report.hpp"
#include "guardlab/scoring_client.hpp"
#include "guardlab/synthetic.hpp"
#include "guardlab/trainer.hpp"

namespace guardlab {

namespace fs = std::filesystem;
using nlohmann::json;

int exit_code_for(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidArgument:
      return kExitUsage;
    case ErrorKind::Transport:
    case ErrorKind::Auth:
    case ErrorKind::Payload:
      return kExitService;
    default:
      return kExitData;
  }
}

namespace {

struct Options {
  // inputs
  std::string sets;
  std::vector<std::string> features;
  std::string validation;
  std::string scorer;
  std::string labeled;
  std::string pairs;
  std::string eval_sets;
  std::string replay;
  // outputs
  std::string out;
  std::string out_dir = ".";
  std::vector<std::string> formats{"json", "csv"};
  std::string features_out;
  // aggregation
  std::string strategy = "skew";
  double skew_threshold = 0.1;
  std::string scale = "probability";
  // metrics / calibration
  std::size_t ece_bins = kDefaultEceBins;
  double t_min = 0.05;
  double t_max = 5.0;
  bool pivot = false;
  bool pivot_safe_only = false;
  // training
  std::size_t epochs = 4;
  std::size_t batch_sets = 4;
  double lr = 1e-3;
  std::uint64_t seed = 7;
  std::size_t jobs = 1;
  std::string variance_filter = "high";
  double min_std = 0.01;
  std::size_t min_set_size = 3;
  bool no_original_in_target = false;
  bool no_original_in_loss = false;
  // judge sweep
  std::vector<double> sim_thresholds = kDefaultSimilarityThresholds;
  std::vector<double> prob_thresholds = kDefaultProbabilityThresholds;
  double sim_threshold = kOperationalSimilarity;
  std::optional<double> accept_prob;
  // service
  std::string base_url = ServiceConfig{}.base_url;
  std::size_t max_in_flight = 4;
  std::size_t max_retries = 3;
  long timeout_ms = 30'000;
  long backoff_ms = 200;
  bool rescore = false;
  // synth
  std::string kind = "corpus";
  std::size_t n = 200;
  std::size_t paraphrases = 9;
  std::size_t dim = 8;
  double outlier_fraction = 0.2;
  std::string mode = "mixed";
  double overconfidence = 2.0;
  double label_noise = 0.0;
  double spurious = 0.0;
  std::string id_prefix = "s";
  // fit-logistic
  double fit_lr = LogisticFitOptions{}.learning_rate;
  std::size_t iterations = LogisticFitOptions{}.iterations;
  double l2 = LogisticFitOptions{}.l2;
};

Error usage(const std::string& message) { return Error(ErrorKind::InvalidArgument, message); }

AggregationStrategy strategy_from(const Options& o) {
  AggregationStrategy s;
  auto kind = parse_strategy(o.strategy);
  if (!kind) throw usage("--strategy must be mean, median or skew");
  s.kind = *kind;
  s.skew_threshold = o.skew_threshold;
  if (o.scale == "probability") s.scale = PercentileScale::Probability;
  else if (o.scale == "logit") s.scale = PercentileScale::Logit;
  else throw usage("--percentile-scale must be probability or logit");
  s.validate();
  return s;
}

json strategy_json(const AggregationStrategy& s) {
  return {{"kind", std::string(to_string(s.kind))},
          {"skew_threshold", s.skew_threshold},
          {"scale", s.scale == PercentileScale::Logit ? "logit" : "probability"}};
}

ServiceConfig service_from(const Options& o) {
  ServiceConfig cfg;
  cfg.base_url = o.base_url;
  cfg.max_in_flight = o.max_in_flight;
  cfg.max_retries = o.max_retries;
  cfg.timeout = std::chrono::milliseconds(o.timeout_ms);
  cfg.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
  cfg.validate();
  return cfg;
}

json service_json(const ServiceConfig& c, const Options& o) {
  return {{"base_url", c.base_url},
          {"auth_token_env", c.auth_token_env},
          {"timeout_ms", c.timeout.count()},
          {"max_retries", c.max_retries},
          {"max_in_flight", c.max_in_flight},
          {"initial_backoff_ms", c.initial_backoff.count()},
          {"replay", o.replay.empty() ? json(nullptr) : json(o.replay)}};
}

json item_errors_json(std::span<const ItemError> errors) {
  json arr = json::array();
  for (const auto& e : errors) {
    arr.push_back({{"item", e.item}, {"kind", std::string(to_string(e.kind))}, {"message", e.message}});
  }
  return arr;
}

/// Writes report files into --out-dir and echoes each path.
class Emitter {
 public:
  Emitter(const Options& o, std::ostream& out) : dir_(o.out_dir), out_(out) {
    for (const auto& f : o.formats) {
      if (f != "json" && f != "csv" && f != "svg") throw usage("--format accepts json, csv, svg");
      formats_.insert(f);
    }
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error(ErrorKind::Io, "cannot create " + dir_.string() + ": " + ec.message());
  }

  bool wants(const std::string& format) const { return formats_.count(format) != 0; }

  void write(const std::string& name, std::string_view content) {
    const fs::path path = dir_ / name;
    write_file_atomic(path, content);
    out_ << "wrote " << path.string() << "\n";
  }

  void write_json(const std::string& name, json report, RunManifest& manifest) {
    manifest.finished_at = utc_timestamp();
    report["manifest"] = to_json(manifest);
    write(name, report.dump(2) + "\n");
  }

  void write_manifest(const std::string& command, RunManifest& manifest) {
    manifest.finished_at = utc_timestamp();
    write(command + ".manifest.json", to_json(manifest).dump(2) + "\n");
  }

 private:
  fs::path dir_;
  std::ostream& out_;
  std::set<std::string> formats_;
};

FeatureStore load_features(const std::vector<std::string>& paths, RunManifest& manifest) {
  FeatureStore store;
  for (const auto& p : paths) {
    manifest.add_input(p);
    store.merge(FeatureStore::load(p));
  }
  return store;
}

std::optional<json> labeled_summary(std::span<const LabeledScore> items, std::size_t bins) {
  if (items.empty()) return std::nullopt;
  ConfusionCounts c;
  std::vector<Prediction> predictions;
  predictions.reserve(items.size());
  for (const auto& item : items) {
    const bool predicted_unsafe = label_of(item.score) == Label::Unsafe;
    const bool gold_unsafe = item.gold == Label::Unsafe;
    if (predicted_unsafe && gold_unsafe) ++c.tp;
    else if (predicted_unsafe) ++c.fp;
    else if (gold_unsafe) ++c.fn;
    else ++c.tn;
    predictions.push_back(prediction_from_score(item.score, item.gold));
  }
  json j = report::to_json(classification_metrics(c));
  j["n"] = items.size();
  j["positive_class"] = "unsafe";
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["tn"] = c.tn;
  j["ece"] = ece(predictions, bins);
  return j;
}

std::string sweep_csv(const std::vector<SweepRow>& sim, const std::vector<SweepRow>& prob) {
  report::CsvWriter csv({"sweep", "threshold", "tp", "fp", "fn", "tn", "precision", "recall", "f1",
                         "accuracy"});
  auto emit = [&](const char* name, const std::vector<SweepRow>& rows) {
    for (const auto& r : rows) {
      csv.row({name, report::number(r.threshold), std::to_string(r.counts.tp),
               std::to_string(r.counts.fp), std::to_string(r.counts.fn), std::to_string(r.counts.tn),
               report::number(r.metrics.precision), report::number(r.metrics.recall),
               report::number(r.metrics.f1), report::number(r.metrics.accuracy)});
    }
  };
  emit("similarity", sim);
  emit("probability", prob);
  return csv.str();
}

std::string reliability_csv(const CalibrationResult& r) {
  report::CsvWriter csv({"stage", "lower", "upper", "count", "avg_confidence", "accuracy"});
  auto emit = [&](const char* stage, const std::vector<ReliabilityBin>& table) {
    for (const auto& b : table) {
      csv.row({stage, report::number(b.lower), report::number(b.upper), std::to_string(b.count),
               report::number(b.avg_confidence), report::number(b.accuracy)});
    }
  };
  emit("before", r.reliability_before);
  emit("after", r.reliability_after);
  return csv.str();
}

// ---------------------------------------------------------------------------

int cmd_eval(const Options& o, RunManifest& manifest, std::ostream& out) {
  Emitter emit(o, out);
  std::vector<ParaphraseSet> sets;
  std::vector<LabeledScore> labeled_scores;
  if (!o.scorer.empty()) {
    if (o.features.empty()) throw usage("--scorer requires --features");
    manifest.add_input(o.sets);
    auto raw = load_sets(o.sets, ScoreRequirement::Optional);
    manifest.add_input(o.scorer);
    const LinearScorer scorer = load_scorer(o.scorer);
    const FeatureStore features = load_features(o.features, manifest);
    sets = score_sets_with(scorer, raw, features);
    if (!o.labeled.empty()) {
      manifest.add_input(o.labeled);
      for (const auto& ex : load_labeled_examples(o.labeled)) {
        labeled_scores.push_back({forward(scorer, ex.x), ex.label});
      }
    }
  } else {
    if (!o.labeled.empty()) throw usage("--labeled requires --scorer");
    manifest.add_input(o.sets);
    sets = load_sets(o.sets, ScoreRequirement::Required);
  }
  if (o.labeled.empty()) {
    for (const auto& s : sets) {
      if (s.gold_label) labeled_scores.push_back({*s.original.score, *s.gold_label});
    }
  }
  if (sets.empty()) throw Error(ErrorKind::EmptyInput, o.sets + ": no paraphrase sets");

  std::vector<DispersionReport> per_set(sets.size());
  std::vector<char> flips(sets.size());
  parallel_for(sets.size(), o.jobs, [&](std::size_t i) {
    per_set[i] = dispersion(sets[i]);
    flips[i] = set_flips(sets[i]) ? 1 : 0;
  });
  const BinnedLfrReport lfr = binned_lfr(sets);
  const ThresholdLfrReport split = threshold_split_lfr(sets);
  const DispersionSummary summary = summarize_dispersion(per_set);

  if (emit.wants("json")) {
    json rows = json::array();
    for (std::size_t i = 0; i < sets.size(); ++i) {
      rows.push_back({{"id", sets[i].id},
                      {"original", *sets[i].original.score},
                      {"bin", std::string(to_string(bin_of(*sets[i].original.score)))},
                      {"flips", flips[i] != 0},
                      {"mean", per_set[i].mean},
                      {"std", per_set[i].std},
                      {"max_delta", per_set[i].max_delta}});
    }
    json j{{"binned_lfr", report::to_json(lfr)},
           {"threshold_lfr", report::to_json(split)},
           {"dispersion", report::to_json(summary)},
           {"sets", std::move(rows)}};
    const auto cls = labeled_summary(labeled_scores, o.ece_bins);
    j["classification"] = cls ? *cls : json(nullptr);
    if (o.pivot) {
      json pivot = json::array();
      for (const auto& r : paraphrase_pivot(sets, o.pivot_safe_only)) pivot.push_back(report::to_json(r));
      j["paraphrase_pivot"] = std::move(pivot);
    }
    emit.write_json("eval_report.json", std::move(j), manifest);
  }
  if (emit.wants("csv")) {
    report::CsvWriter lfr_csv({"view", "bin", "sets", "flipping", "lfr"});
    auto bin_row = [&](const char* view, const char* name, const FlipBin& b) {
      lfr_csv.row({view, name, std::to_string(b.sets), std::to_string(b.flipping),
                   report::number(b.rate())});
    };
    bin_row("confidence", "unsafe", lfr.unsafe);
    bin_row("confidence", "ambiguous", lfr.ambiguous);
    bin_row("confidence", "safe", lfr.safe);
    lfr_csv.row({"confidence", "average", std::to_string(lfr.total_sets()), "",
                 report::number(lfr.average_lfr())});
    bin_row("threshold", "below_0.5", split.below_half);
    bin_row("threshold", "at_or_above_0.5", split.at_or_above_half);
    emit.write("eval_lfr.csv", lfr_csv.str());

    report::CsvWriter sets_csv({"id", "original", "bin", "flips", "mean", "std", "max_delta"});
    for (std::size_t i = 0; i < sets.size(); ++i) {
      sets_csv.row({sets[i].id, report::number(*sets[i].original.score),
                    std::string(to_string(bin_of(*sets[i].original.score))), flips[i] ? "1" : "0",
                    report::number(per_set[i].mean), report::number(per_set[i].std),
                    report::number(per_set[i].max_delta)});
    }
    emit.write("eval_sets.csv", sets_csv.str());
  }
  if (emit.wants("svg")) {
    const auto points = report::sensitivity_points(sets);
    emit.write("eval_scatter.svg", report::sensitivity_scatter_svg(points, "Paraphrase sensitivity"));
  }
  if (!emit.wants("json")) emit.write_manifest("eval", manifest);
  return kExitOk;
}

int cmd_train(const Options& o, RunManifest& manifest, std::ostream& out) {
  if (o.features.empty()) throw usage("train requires --features");
  TrainingConfig cfg;
  cfg.learning_rate = o.lr;
  cfg.epochs = o.epochs;
  cfg.batch_size_sets = o.batch_sets;
  cfg.strategy = strategy_from(o);
  cfg.min_set_size = o.min_set_size;
  cfg.min_std = o.min_std;
  if (o.variance_filter == "high") cfg.variance_filter = VarianceFilter::KeepHigh;
  else if (o.variance_filter == "low") cfg.variance_filter = VarianceFilter::KeepLow;
  else if (o.variance_filter == "off") cfg.variance_filter = VarianceFilter::Off;
  else throw usage("--variance-filter must be high, low or off");
  cfg.include_original_in_target = !o.no_original_in_target;
  cfg.include_original_in_loss = !o.no_original_in_loss;
  cfg.seed = o.seed;
  cfg.validate();

  Emitter emit(o, out);
  manifest.config["training"] = {{"learning_rate", cfg.learning_rate},
                                 {"epochs", cfg.epochs},
                                 {"batch_size_sets", cfg.batch_size_sets},
                                 {"strategy", strategy_json(cfg.strategy)},
                                 {"min_set_size", cfg.min_set_size},
                                 {"min_std", cfg.min_std},
                                 {"variance_filter", o.variance_filter},
                                 {"include_original_in_target", cfg.include_original_in_target},
                                 {"include_original_in_loss", cfg.include_original_in_loss},
                                 {"init_scale", cfg.init_scale}};

  manifest.add_input(o.sets);
  const auto sets = load_sets(o.sets, ScoreRequirement::Optional);
  const FeatureStore features = load_features(o.features, manifest);
  LinearScorer initial;
  if (!o.scorer.empty()) {
    manifest.add_input(o.scorer);
    initial = load_scorer(o.scorer);
  } else {
    initial = random_scorer(features.dim(), cfg.seed, cfg.init_scale);
  }

  const TrainingResult result = train(sets, features, cfg, initial);
  const fs::path scorer_path = o.out.empty() ? fs::path(o.out_dir) / "scorer.json" : fs::path(o.out);
  save_scorer(result.scorer, scorer_path);
  out << "wrote " << scorer_path.string() << "\n";

  json j{{"scorer", scorer_path.string()},
         {"sets_used", result.sets_used},
         {"sets_filtered_out", result.sets_filtered_out},
         {"steps", result.steps},
         {"loss_history", result.history}};

  // --- Stage 3: re-evaluate before/after on held-out sets ---
  if (!o.eval_sets.empty()) {
    manifest.add_input(o.eval_sets);
    const auto held_out = load_sets(o.eval_sets, ScoreRequirement::Optional);
    std::vector<LabeledExample> labeled;
    if (!o.labeled.empty()) {
      manifest.add_input(o.labeled);
      labeled = load_labeled_examples(o.labeled);
    }
    j["evaluation"] = {
        {"before", report::to_json(evaluate(initial, held_out, features, labeled, o.ece_bins))},
        {"after", report::to_json(evaluate(result.scorer, held_out, features, labeled, o.ece_bins))}};
  }
  emit.write_json("train_report.json", std::move(j), manifest);
  return kExitOk;
}

int cmd_calibrate(const Options& o, RunManifest& manifest, std::ostream& out) {
  CalibrationOptions opts;
  opts.t_min = o.t_min;
  opts.t_max = o.t_max;
  opts.ece_bins = o.ece_bins;
  if (!(o.t_min > 0.0) || !(o.t_max > o.t_min)) throw usage("need 0 < --t-min < --t-max");
  if (o.ece_bins == 0) throw usage("--ece-bins must be positive");
  if (o.sets.empty() != o.out.empty()) throw usage("--sets and --out must be given together");
  manifest.config["calibration"] = {{"t_min", opts.t_min}, {"t_max", opts.t_max}, {"ece_bins", opts.ece_bins}};

  Emitter emit(o, out);
  manifest.add_input(o.validation);
  const auto validation = load_labeled_scores(o.validation);
  const CalibrationResult result = fit_temperature(validation, opts);
  out << "temperature " << report::number(result.temperature) << "\n";

  if (!o.sets.empty()) {
    manifest.add_input(o.sets);
    auto sets = load_sets(o.sets, ScoreRequirement::Required);
    const Temperature t(result.temperature);
    for (auto& s : sets) {
      s.original.score = apply_temperature(*s.original.score, t);
      for (auto& m : s.paraphrases) m.score = apply_temperature(*m.score, t);
    }
    save_sets(sets, o.out);
    out << "wrote " << o.out << "\n";
  }

  if (emit.wants("json")) emit.write_json("calibration.json", report::to_json(result), manifest);
  if (emit.wants("csv")) emit.write("calibration_reliability.csv", reliability_csv(result));
  if (emit.wants("svg")) {
    emit.write("reliability_before.svg",
               report::reliability_diagram_svg(result.reliability_before, "Reliability before scaling"));
    emit.write("reliability_after.svg",
               report::reliability_diagram_svg(result.reliability_after, "Reliability after scaling"));
  }
  if (!emit.wants("json")) emit.write_manifest("calibrate", manifest);
  return kExitOk;
}

int cmd_judge_sweep(const Options& o, RunManifest& manifest, std::ostream& out) {
  if (o.accept_prob.has_value() != !o.out.empty()) {
    throw usage("--accept-prob and --out must be given together");
  }
  manifest.config["sweep"] = {{"similarity_thresholds", o.sim_thresholds},
                              {"probability_thresholds", o.prob_thresholds},
                              {"similarity_threshold", o.sim_threshold},
                              {"accept_prob", o.accept_prob ? json(*o.accept_prob) : json(nullptr)}};
  Emitter emit(o, out);
  manifest.add_input(o.pairs);
  const auto pairs = load_judged_pairs(o.pairs);
  const auto sim = sweep_similarity_thresholds(pairs, o.sim_thresholds);
  const auto prob = sweep_probability_thresholds(pairs, o.sim_threshold, o.prob_thresholds);

  if (o.accept_prob) {
    const auto kept = two_stage_filter(pairs, *o.accept_prob);
    save_judged_pairs(kept, o.out);
    out << "wrote " << o.out << " (" << kept.size() << " of " << pairs.size() << " pairs kept)\n";
  }
  if (emit.wants("json")) {
    json s = json::array();
    json p = json::array();
    for (const auto& r : sim) s.push_back(report::to_json(r));
    for (const auto& r : prob) p.push_back(report::to_json(r));
    emit.write_json("judge_sweep.json",
                    {{"pairs", pairs.size()}, {"similarity_sweep", s}, {"probability_sweep", p}},
                    manifest);
  }
  if (emit.wants("csv")) emit.write("judge_sweep.csv", sweep_csv(sim, prob));
  if (!emit.wants("json")) emit.write_manifest("judge-sweep", manifest);
  return kExitOk;
}

std::unique_ptr<Transport> make_transport(const Options& o, const ServiceConfig& cfg,
                                          const CliEnv& env, RunManifest& manifest) {
  if (env.transport_factory) return env.transport_factory(cfg);
  if (!o.replay.empty()) {
    manifest.add_input(o.replay);
    return ReplayTransport::from_file(o.replay);
  }
  return std::make_unique<HttpTransport>(cfg.base_url, cfg.timeout);
}

int cmd_score(const Options& o, RunManifest& manifest, std::ostream& out, std::ostream& err,
              const CliEnv& env) {
  const ServiceConfig cfg = service_from(o);
  manifest.config["service"] = service_json(cfg, o);
  manifest.config["rescore"] = o.rescore;
  Emitter emit(o, out);
  manifest.add_input(o.sets);
  const auto sets = load_sets(o.sets, ScoreRequirement::Optional);
  auto transport = make_transport(o, cfg, env, manifest);
  const ScoreOutcome outcome = score_sets(sets, cfg, *transport, {o.rescore});

  for (const auto& e : outcome.errors) err << "error: " << e.item << ": " << e.message << "\n";
  const bool nothing_scored = outcome.scored == 0 && !outcome.errors.empty();
  if (!nothing_scored) {
    save_sets(outcome.sets, o.out);
    out << "wrote " << o.out << "\n";
  }
  emit.write_json("score_report.json",
                  {{"output", nothing_scored ? json(nullptr) : json(o.out)},
                   {"members_scored", outcome.scored},
                   {"requests", outcome.requests},
                   {"errors", item_errors_json(outcome.errors)}},
                  manifest);
  return outcome.errors.empty() ? kExitOk : kExitService;
}

int cmd_judge(const Options& o, RunManifest& manifest, std::ostream& out, std::ostream& err,
              const CliEnv& env) {
  const ServiceConfig cfg = service_from(o);
  manifest.config["service"] = service_json(cfg, o);
  Emitter emit(o, out);
  manifest.add_input(o.pairs);
  const auto pairs = load_pairs_to_judge(o.pairs);
  auto transport = make_transport(o, cfg, env, manifest);
  const JudgeOutcome outcome = judge_pairs(pairs, cfg, *transport);

  for (const auto& e : outcome.errors) err << "error: " << e.item << ": " << e.message << "\n";
  std::size_t assumed = 0;
  for (const auto& p : outcome.pairs) assumed += p.probability_assumed ? 1 : 0;
  if (assumed) err << "warning: " << assumed << " verdicts had no probability; assumed 1.0\n";
  if (!outcome.pairs.empty()) {
    save_judged_pairs(outcome.pairs, o.out);
    out << "wrote " << o.out << "\n";
  }
  emit.write_json("judge_report.json",
                  {{"output", outcome.pairs.empty() ? json(nullptr) : json(o.out)},
                   {"judged", outcome.pairs.size()},
                   {"probability_assumed", assumed},
                   {"requests", outcome.requests},
                   {"errors", item_errors_json(outcome.errors)}},
                  manifest);
  return outcome.errors.empty() ? kExitOk : kExitService;
}

int cmd_synth(const Options& o, RunManifest& manifest, std::ostream& out) {
  Emitter emit(o, out);
  manifest.seed = o.seed;
  manifest.config["synth"] = {{"kind", o.kind},
                              {"n", o.n},
                              {"paraphrases", o.paraphrases},
                              {"dim", o.dim},
                              {"outlier_fraction", o.outlier_fraction},
                              {"mode", o.mode},
                              {"id_prefix", o.id_prefix},
                              {"label_noise", o.label_noise},
                              {"spurious", o.spurious},
                              {"overconfidence", o.overconfidence}};
  if (o.kind == "corpus") {
    if (o.features_out.empty()) throw usage("synth corpus requires --features-out");
    synthetic::CorpusConfig c;
    c.n_sets = o.n;
    c.paraphrases = o.paraphrases;
    c.dim = o.dim;
    c.outlier_fraction = o.outlier_fraction;
    if (o.mode == "mixed") c.mode = synthetic::OutlierMode::Mixed;
    else if (o.mode == "upward") c.mode = synthetic::OutlierMode::Upward;
    else throw usage("--mode must be mixed or upward");
    c.seed = o.seed;
    c.id_prefix = o.id_prefix;
    const auto corpus = synthetic::make_corpus(c);
    save_sets(corpus.sets, o.out);
    corpus.features.save(o.features_out);
    out << "wrote " << o.out << "\nwrote " << o.features_out << "\n";
  } else if (o.kind == "labeled" || o.kind == "initial-fit") {
    synthetic::LabeledConfig c = o.kind == "labeled" ? synthetic::LabeledConfig{}
                                                      : synthetic::initial_fit_config(o.dim, o.seed);
    if (o.kind == "labeled") {
      c.dim = o.dim;
      c.label_noise = o.label_noise;
      c.spurious_strength = o.spurious;
      c.seed = o.seed;
    }
    c.n = o.n;
    save_labeled_examples(synthetic::make_labeled(c), o.out);
    out << "wrote " << o.out << "\n";
  } else if (o.kind == "calibration") {
    save_labeled_scores(synthetic::make_calibration_data(o.n, o.overconfidence, o.seed), o.out);
    out << "wrote " << o.out << "\n";
  } else {
    throw usage("--kind must be corpus, labeled, initial-fit or calibration");
  }
  emit.write_manifest("synth", manifest);
  return kExitOk;
}

int cmd_fit_logistic(const Options& o, RunManifest& manifest, std::ostream& out) {
  LogisticFitOptions fit;
  fit.learning_rate = o.fit_lr;
  fit.iterations = o.iterations;
  fit.l2 = o.l2;
  manifest.config["logistic"] = {{"learning_rate", fit.learning_rate},
                                 {"iterations", fit.iterations},
                                 {"l2", fit.l2}};
  Emitter emit(o, out);
  manifest.add_input(o.labeled);
  const auto data = load_labeled_examples(o.labeled);
  save_scorer(fit_logistic_regression(data, fit), o.out);
  out << "wrote " << o.out << "\n";
  emit.write_manifest("fit-logistic", manifest);
  return kExitOk;
}

// ---------------------------------------------------------------------------

void add_output_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--out-dir", o.out_dir, "Directory for reports")->capture_default_str();
  cmd->add_option("--format", o.formats, "Report formats: json,csv,svg")
      ->delimiter(',')
      ->capture_default_str();
}

void add_strategy_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--strategy", o.strategy, "mean, median or skew")->capture_default_str();
  cmd->add_option("--skew-threshold", o.skew_threshold, "Bowley |b| above which a set is skewed")
      ->capture_default_str();
  cmd->add_option("--percentile-scale", o.scale, "probability or logit")->capture_default_str();
}

void add_service_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--base-url", o.base_url, "Scoring service base URL")->capture_default_str();
  cmd->add_option("--max-in-flight", o.max_in_flight)->capture_default_str();
  cmd->add_option("--max-retries", o.max_retries)->capture_default_str();
  cmd->add_option("--timeout-ms", o.timeout_ms)->capture_default_str();
  cmd->add_option("--backoff-ms", o.backoff_ms, "Initial retry backoff")->capture_default_str();
  cmd->add_option("--replay", o.replay, "Serve responses from a recorded transcript")
      ->check(CLI::ExistingFile);
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err,
            const CliEnv& env) {
  Options o;
  CLI::App app{"Paraphrase-robustness analysis for safety scorers", "guardlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolkitVersion);

  auto* eval = app.add_subcommand("eval", "Label-flip rates and dispersion of scored sets");
  eval->add_option("--sets", o.sets, "Paraphrase sets (JSONL)")->required()->check(CLI::ExistingFile);
  eval->add_option("--scorer", o.scorer, "Rescore members with this linear scorer")
      ->check(CLI::ExistingFile);
  eval->add_option("--features", o.features, "Feature vectors (JSONL), repeatable")
      ->check(CLI::ExistingFile);
  eval->add_option("--labeled", o.labeled, "Labeled examples for accuracy/F1/ECE")
      ->check(CLI::ExistingFile);
  eval->add_option("--ece-bins", o.ece_bins)->capture_default_str();
  eval->add_option("--jobs", o.jobs, "Worker threads for per-set metrics")->capture_default_str();
  eval->add_flag("--pivot", o.pivot, "Include the per-paraphrase-text pivot");
  eval->add_flag("--pivot-safe-only", o.pivot_safe_only, "Pivot over safe originals only");
  add_output_flags(eval, o);

  auto* train_cmd = app.add_subcommand("train", "Fit a linear scorer with the anchor loss");
  train_cmd->add_option("--sets", o.sets)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--features", o.features)->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--scorer", o.scorer, "Initial scorer (default: small random)")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--eval-sets", o.eval_sets, "Held-out sets for before/after evaluation")
      ->check(CLI::ExistingFile);
  train_cmd->add_option("--labeled", o.labeled)->check(CLI::ExistingFile);
  train_cmd->add_option("--out", o.out, "Trained scorer path (default <out-dir>/scorer.json)");
  add_strategy_flags(train_cmd, o);
  train_cmd->add_option("--epochs", o.epochs)->capture_default_str();
  train_cmd->add_option("--batch-sets", o.batch_sets)->capture_default_str();
  train_cmd->add_option("--lr", o.lr)->capture_default_str();
  train_cmd->add_option("--seed", o.seed)->capture_default_str();
  train_cmd->add_option("--variance-filter", o.variance_filter, "high, low or off")
      ->capture_default_str();
  train_cmd->add_option("--min-std", o.min_std)->capture_default_str();
  train_cmd->add_option("--min-set-size", o.min_set_size)->capture_default_str();
  train_cmd->add_flag("--no-original-in-target", o.no_original_in_target);
  train_cmd->add_flag("--no-original-in-loss", o.no_original_in_loss);
  train_cmd->add_option("--ece-bins", o.ece_bins)->capture_default_str();
  add_output_flags(train_cmd, o);

  auto* calibrate = app.add_subcommand("calibrate", "Fit a temperature on a validation file");
  calibrate->add_option("--validation", o.validation, "JSONL {score, gold_label}")
      ->required()
      ->check(CLI::ExistingFile);
  calibrate->add_option("--t-min", o.t_min)->capture_default_str();
  calibrate->add_option("--t-max", o.t_max)->capture_default_str();
  calibrate->add_option("--ece-bins", o.ece_bins)->capture_default_str();
  calibrate->add_option("--sets", o.sets, "Scored sets to rescale")->check(CLI::ExistingFile);
  calibrate->add_option("--out", o.out, "Where to write the rescaled sets");
  add_output_flags(calibrate, o);

  auto* sweep = app.add_subcommand("judge-sweep", "Threshold sweeps over judged pairs");
  sweep->add_option("--pairs", o.pairs, "Judged pairs (JSONL)")->required()->check(CLI::ExistingFile);
  sweep->add_option("--sim-thresholds", o.sim_thresholds)->delimiter(',')->capture_default_str();
  sweep->add_option("--prob-thresholds", o.prob_thresholds)->delimiter(',')->capture_default_str();
  sweep->add_option("--sim-threshold", o.sim_threshold, "Gold similarity defining a positive")
      ->capture_default_str();
  sweep->add_option("--accept-prob", o.accept_prob, "Write pairs passing the filter at this level");
  sweep->add_option("--out", o.out, "Filtered pairs output");
  add_output_flags(sweep, o);

  auto* score = app.add_subcommand("score", "Fill member scores from the scoring service");
  score->add_option("--sets", o.sets)->required()->check(CLI::ExistingFile);
  score->add_option("--out", o.out, "Scored sets output")->required();
  score->add_flag("--rescore", o.rescore, "Overwrite existing scores");
  add_service_flags(score, o);
  add_output_flags(score, o);

  auto* judge = app.add_subcommand("judge", "Ask the judge service about sentence pairs");
  judge->add_option("--pairs", o.pairs, "JSONL {a, b, gold_similarity?}")
      ->required()
      ->check(CLI::ExistingFile);
  judge->add_option("--out", o.out, "Judged pairs output")->required();
  add_service_flags(judge, o);
  add_output_flags(judge, o);

  auto* synth = app.add_subcommand("synth", "Generate seeded synthetic data");
  synth->add_option("--kind", o.kind, "corpus, labeled, initial-fit or calibration")
      ->capture_default_str();
  synth->add_option("--out", o.out)->required();
  synth->add_option("--features-out", o.features_out, "Feature file for --kind corpus");
  synth->add_option("--n", o.n, "Sets or examples")->capture_default_str();
  synth->add_option("--paraphrases", o.paraphrases)->capture_default_str();
  synth->add_option("--dim", o.dim)->capture_default_str();
  synth->add_option("--outlier-fraction", o.outlier_fraction)->capture_default_str();
  synth->add_option("--mode", o.mode, "mixed or upward")->capture_default_str();
  synth->add_option("--id-prefix", o.id_prefix)->capture_default_str();
  synth->add_option("--label-noise", o.label_noise)->capture_default_str();
  synth->add_option("--spurious", o.spurious, "Style/label correlation strength")
      ->capture_default_str();
  synth->add_option("--overconfidence", o.overconfidence)->capture_default_str();
  synth->add_option("--seed", o.seed)->capture_default_str();
  add_output_flags(synth, o);

  auto* fit = app.add_subcommand("fit-logistic", "Fit a logistic-regression scorer");
  fit->add_option("--labeled", o.labeled)->required()->check(CLI::ExistingFile);
  fit->add_option("--out", o.out)->required();
  fit->add_option("--lr", o.fit_lr)->capture_default_str();
  fit->add_option("--iterations", o.iterations)->capture_default_str();
  fit->add_option("--l2", o.l2)->capture_default_str();
  add_output_flags(fit, o);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  RunManifest manifest;
  manifest.command_line.push_back("guardlab");
  manifest.command_line.insert(manifest.command_line.end(), args.begin(), args.end());
  manifest.started_at = utc_timestamp();
  manifest.config["out_dir"] = o.out_dir;
  manifest.config["formats"] = o.formats;

  try {
    if (*eval) {
      manifest.config["ece_bins"] = o.ece_bins;
      manifest.config["jobs"] = o.jobs;
      return cmd_eval(o, manifest, out);
    }
    if (*train_cmd) {
      manifest.seed = o.seed;
      return cmd_train(o, manifest, out);
    }
    if (*calibrate) return cmd_calibrate(o, manifest, out);
    if (*sweep) return cmd_judge_sweep(o, manifest, out);
    if (*score) return cmd_score(o, manifest, out, err, env);
    if (*judge) return cmd_judge(o, manifest, out, err, env);
    if (*synth) return cmd_synth(o, manifest, out);
    if (*fit) return cmd_fit_logistic(o, manifest, out);
  } catch (const Error& e) {
    err << "error [" << to_string(e.kind()) << "]: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace guardlab
