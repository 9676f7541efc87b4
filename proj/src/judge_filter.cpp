#include "guardlab/judge_filter.hpp"

#include <algorithm>
#include <cctype>

#include "guardlab/dataset_io.hpp"

namespace guardlab {

using nlohmann::json;

namespace {

void check_threshold(double t, const char* what) {
  if (!(t >= 0.0 && t <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, std::string(what) + " must lie in [0, 1]");
  }
}

double gold_of(const JudgedPair& p) {
  if (!p.gold_similarity) {
    throw Error(ErrorKind::MissingGold,
                "pair ('" + p.sentence_a.substr(0, 40) + "', ...) has no gold_similarity");
  }
  return *p.gold_similarity;
}

void count(ConfusionCounts& c, bool gold, bool predicted) {
  if (gold && predicted) ++c.tp;
  else if (!gold && predicted) ++c.fp;
  else if (gold && !predicted) ++c.fn;
  else ++c.tn;
}

bool accepted(const JudgedPair& p, double prob_threshold) {
  return p.verdict == Verdict::Yes && p.verdict_probability >= prob_threshold;
}

}  // namespace

std::vector<JudgedPair> two_stage_filter(std::span<const JudgedPair> pairs, double prob_threshold) {
  check_threshold(prob_threshold, "probability threshold");
  std::vector<JudgedPair> out;
  std::copy_if(pairs.begin(), pairs.end(), std::back_inserter(out),
               [&](const JudgedPair& p) { return accepted(p, prob_threshold); });
  return out;
}

std::vector<SweepRow> sweep_similarity_thresholds(std::span<const JudgedPair> pairs,
                                                  std::span<const double> thresholds) {
  for (const auto& p : pairs) gold_of(p);
  std::vector<SweepRow> rows;
  for (double s : thresholds) {
    check_threshold(s, "similarity threshold");
    SweepRow row;
    row.threshold = s;
    for (const auto& p : pairs) count(row.counts, gold_of(p) >= s, p.verdict == Verdict::Yes);
    row.metrics = classification_metrics(row.counts);
    rows.push_back(row);
  }
  return rows;
}

std::vector<SweepRow> sweep_probability_thresholds(std::span<const JudgedPair> pairs,
                                                   double sim_threshold,
                                                   std::span<const double> prob_thresholds) {
  check_threshold(sim_threshold, "similarity threshold");
  for (const auto& p : pairs) gold_of(p);
  std::vector<SweepRow> rows;
  for (double t : prob_thresholds) {
    check_threshold(t, "probability threshold");
    SweepRow row;
    row.threshold = t;
    for (const auto& p : pairs) count(row.counts, gold_of(p) >= sim_threshold, accepted(p, t));
    row.metrics = classification_metrics(row.counts);
    rows.push_back(row);
  }
  return rows;
}

std::optional<Verdict> parse_verdict(std::string_view reply) {
  const auto begin = reply.find_first_not_of(" \t\r\n\"'");
  if (begin == std::string_view::npos) return std::nullopt;
  std::string token;
  for (std::size_t i = begin; i < reply.size(); ++i) {
    const auto c = static_cast<unsigned char>(reply[i]);
    if (!std::isalpha(c)) break;
    token.push_back(static_cast<char>(std::tolower(c)));
  }
  if (token == "yes") return Verdict::Yes;
  if (token == "no") return Verdict::No;
  return std::nullopt;
}

std::string_view to_string(Verdict verdict) { return verdict == Verdict::Yes ? "yes" : "no"; }

json to_json(const JudgedPair& pair) {
  json j = json::object();
  j["a"] = pair.sentence_a;
  j["b"] = pair.sentence_b;
  j["verdict"] = std::string(to_string(pair.verdict));
  j["prob"] = pair.verdict_probability;
  if (pair.gold_similarity) j["gold_similarity"] = *pair.gold_similarity;
  if (pair.probability_assumed) j["prob_assumed"] = true;
  return j;
}

JudgedPair judged_pair_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, where + ": expected a JSON object");
  JudgedPair p;
  auto text = [&](const char* key) {
    auto it = j.find(key);
    if (it == j.end() || !it->is_string()) {
      throw Error(ErrorKind::Schema, where + ": missing string field '" + key + "'");
    }
    return it->get<std::string>();
  };
  p.sentence_a = text("a");
  p.sentence_b = text("b");
  auto verdict = parse_verdict(text("verdict"));
  if (!verdict) throw Error(ErrorKind::Schema, where + ": 'verdict' must be yes|no");
  p.verdict = *verdict;
  auto prob = j.find("prob");
  if (prob == j.end() || !prob->is_number()) {
    throw Error(ErrorKind::Schema, where + ": missing numeric field 'prob'");
  }
  p.verdict_probability = prob->get<double>();
  if (!is_valid_score(p.verdict_probability)) {
    throw Error(ErrorKind::Schema, where + ": 'prob' outside [0, 1]");
  }
  if (auto g = j.find("gold_similarity"); g != j.end() && !g->is_null()) {
    if (!g->is_number() || !is_valid_score(g->get<double>())) {
      throw Error(ErrorKind::Schema, where + ": 'gold_similarity' must be a number in [0, 1]");
    }
    p.gold_similarity = g->get<double>();
  }
  if (auto a = j.find("prob_assumed"); a != j.end() && a->is_boolean()) {
    p.probability_assumed = a->get<bool>();
  }
  return p;
}

std::vector<JudgedPair> load_judged_pairs(const std::filesystem::path& path) {
  std::vector<JudgedPair> pairs;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    pairs.push_back(judged_pair_from_json(j, path.string() + ":" + std::to_string(line)));
  });
  return pairs;
}

void save_judged_pairs(std::span<const JudgedPair> pairs, const std::filesystem::path& path) {
  std::string out;
  for (const auto& p : pairs) {
    out += to_json(p).dump();
    out += '\n';
  }
  write_file_atomic(path, out);
}

}  // namespace guardlab
