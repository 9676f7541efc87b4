#include "guardlab/report.hpp"

#include <charconv>
#include <cstdio>

namespace guardlab::report {

using nlohmann::json;

namespace {

json opt(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

// Fixed two-decimal coordinates keep SVG output byte-stable.
std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string escape_xml(std::string_view text) {
  std::string out;
  for (char c : text) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}

constexpr double kSize = 400.0;
constexpr double kMargin = 50.0;

double px(double v) { return kMargin + v * kSize; }
double py(double v) { return kMargin + (1.0 - v) * kSize; }

std::string frame(std::string_view title) {
  std::string s;
  const double total = kSize + 2 * kMargin;
  s += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(total) + "\" height=\"" +
       coord(total) + "\" viewBox=\"0 0 " + coord(total) + " " + coord(total) + "\">\n";
  s += "<rect x=\"0\" y=\"0\" width=\"" + coord(total) + "\" height=\"" + coord(total) +
       "\" fill=\"white\"/>\n";
  s += "<text x=\"" + coord(total / 2) + "\" y=\"30.00\" text-anchor=\"middle\" "
       "font-family=\"sans-serif\" font-size=\"14\">" + escape_xml(title) + "</text>\n";
  s += "<rect x=\"" + coord(kMargin) + "\" y=\"" + coord(kMargin) + "\" width=\"" + coord(kSize) +
       "\" height=\"" + coord(kSize) + "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double v = k / 4.0;
    s += "<text x=\"" + coord(px(v)) + "\" y=\"" + coord(kMargin + kSize + 16) +
         "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"10\">" + coord(v) +
         "</text>\n";
    s += "<text x=\"" + coord(kMargin - 6) + "\" y=\"" + coord(py(v) + 3) +
         "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"10\">" + coord(v) +
         "</text>\n";
  }
  s += "<line x1=\"" + coord(px(0)) + "\" y1=\"" + coord(py(0)) + "\" x2=\"" + coord(px(1)) +
       "\" y2=\"" + coord(py(1)) + "\" stroke=\"gray\" stroke-dasharray=\"4 4\"/>\n";
  return s;
}

}  // namespace

json to_json(const FlipBin& bin) {
  return json{{"sets", bin.sets}, {"flipping", bin.flipping}, {"lfr", opt(bin.rate())}};
}

json to_json(const BinnedLfrReport& r) {
  return json{{"unsafe", to_json(r.unsafe)},
              {"ambiguous", to_json(r.ambiguous)},
              {"safe", to_json(r.safe)},
              {"average_lfr", r.average_lfr()}};
}

json to_json(const ThresholdLfrReport& r) {
  return json{{"below_half", to_json(r.below_half)},
              {"at_or_above_half", to_json(r.at_or_above_half)}};
}

json to_json(const DispersionSummary& s) {
  return json{{"sets", s.sets},
              {"mean_score", s.mean_score},
              {"mean_std", s.mean_std},
              {"mean_max_delta", s.mean_max_delta},
              {"max_delta", s.max_delta}};
}

json to_json(const ParaphrasePivotRow& row) {
  return json{{"text", row.text},
              {"count", row.count},
              {"mean", row.mean},
              {"std", row.std},
              {"max_delta", row.max_delta}};
}

json to_json(const ClassificationMetrics& m) {
  return json{{"precision", opt(m.precision)},
              {"recall", opt(m.recall)},
              {"f1", opt(m.f1)},
              {"accuracy", opt(m.accuracy)}};
}

json to_json(const SweepRow& row) {
  json j = to_json(row.metrics);
  j["threshold"] = row.threshold;
  j["tp"] = row.counts.tp;
  j["fp"] = row.counts.fp;
  j["fn"] = row.counts.fn;
  j["tn"] = row.counts.tn;
  return j;
}

json to_json(const ReliabilityBin& bin) {
  return json{{"lower", bin.lower},
              {"upper", bin.upper},
              {"count", bin.count},
              {"avg_confidence", opt(bin.avg_confidence)},
              {"accuracy", opt(bin.accuracy)}};
}

json to_json(const CalibrationResult& r) {
  json before = json::array();
  json after = json::array();
  for (const auto& b : r.reliability_before) before.push_back(to_json(b));
  for (const auto& b : r.reliability_after) after.push_back(to_json(b));
  return json{{"temperature", r.temperature},
              {"at_upper_bound", r.at_upper_bound},
              {"at_lower_bound", r.at_lower_bound},
              {"ece_before", r.ece_before},
              {"ece_after", r.ece_after},
              {"bce_before", r.bce_before},
              {"bce_after", r.bce_after},
              {"n_validation", r.n_validation},
              {"reliability_before", std::move(before)},
              {"reliability_after", std::move(after)}};
}

json to_json(const EvaluationBundle& b) {
  json j{{"binned_lfr", to_json(b.lfr)},
         {"threshold_lfr", to_json(b.split)},
         {"dispersion", to_json(b.dispersion)},
         {"labeled_examples", b.labeled}};
  j["accuracy"] = opt(b.accuracy);
  j["f1_unsafe"] = opt(b.f1);
  j["ece"] = opt(b.ece);
  return j;
}

std::string csv_field(std::string_view value) {
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(value);
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out += '"';
  return out;
}

CsvWriter::CsvWriter(std::vector<std::string> header) : columns_(header.size()) { row(header); }

void CsvWriter::row(const std::vector<std::string>& fields) {
  if (fields.size() != columns_) {
    throw Error(ErrorKind::InvalidArgument, "CSV row has " + std::to_string(fields.size()) +
                                                " fields, expected " + std::to_string(columns_));
  }
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out_ += ',';
    out_ += csv_field(fields[i]);
  }
  out_ += "\r\n";
}

std::string number(std::optional<double> v) {
  if (!v) return "N/A";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, *v);
  return std::string(buf, end);
}

std::vector<ScatterPoint> sensitivity_points(std::span<const ParaphraseSet> sets) {
  std::vector<ScatterPoint> out;
  for (const auto& s : sets) {
    require_scored(s);
    for (const auto& m : s.paraphrases) out.push_back({*s.original.score, *m.score});
  }
  return out;
}

std::string sensitivity_scatter_svg(std::span<const ScatterPoint> points, std::string_view title) {
  std::string s = frame(title);
  s += "<line x1=\"" + coord(px(0.5)) + "\" y1=\"" + coord(py(0)) + "\" x2=\"" + coord(px(0.5)) +
       "\" y2=\"" + coord(py(1)) + "\" stroke=\"red\" stroke-width=\"0.5\"/>\n";
  s += "<line x1=\"" + coord(px(0)) + "\" y1=\"" + coord(py(0.5)) + "\" x2=\"" + coord(px(1)) +
       "\" y2=\"" + coord(py(0.5)) + "\" stroke=\"red\" stroke-width=\"0.5\"/>\n";
  for (const auto& p : points) {
    s += "<circle cx=\"" + coord(px(p.original)) + "\" cy=\"" + coord(py(p.paraphrase)) +
         "\" r=\"2.00\" fill=\"steelblue\" fill-opacity=\"0.5\"/>\n";
  }
  s += "<text x=\"" + coord(px(0.5)) + "\" y=\"" + coord(kMargin + kSize + 34) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">original score</text>\n";
  s += "<text x=\"14.00\" y=\"" + coord(py(0.5)) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14.00 " +
       coord(py(0.5)) + ")\">paraphrase score</text>\n";
  s += "</svg>\n";
  return s;
}

std::string reliability_diagram_svg(std::span<const ReliabilityBin> table, std::string_view title) {
  std::string s = frame(title);
  for (const auto& b : table) {
    if (b.count == 0) continue;
    const double acc = *b.accuracy;
    s += "<rect x=\"" + coord(px(b.lower)) + "\" y=\"" + coord(py(acc)) + "\" width=\"" +
         coord((b.upper - b.lower) * kSize) + "\" height=\"" + coord(acc * kSize) +
         "\" fill=\"steelblue\" stroke=\"black\" stroke-width=\"0.5\"/>\n";
    s += "<circle cx=\"" + coord(px(*b.avg_confidence)) + "\" cy=\"" + coord(py(*b.avg_confidence)) +
         "\" r=\"3.00\" fill=\"orange\"/>\n";
  }
  s += "<text x=\"" + coord(px(0.5)) + "\" y=\"" + coord(kMargin + kSize + 34) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">confidence</text>\n";
  s += "<text x=\"14.00\" y=\"" + coord(py(0.5)) +
       "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 14.00 " +
       coord(py(0.5)) + ")\">accuracy</text>\n";
  s += "</svg>\n";
  return s;
}

}  // namespace guardlab::report
