#pragma once

// Report emission: JSON objects (sorted keys), RFC 4180 CSV and fixed-layout
// SVG charts.

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guardlab/calibrate.hpp"
#include "guardlab/judge_filter.hpp"
#include "guardlab/metrics.hpp"
#include "guardlab/trainer.hpp"

namespace guardlab::report {

nlohmann::json to_json(const FlipBin& bin);
nlohmann::json to_json(const BinnedLfrReport& r);
nlohmann::json to_json(const ThresholdLfrReport& r);
nlohmann::json to_json(const DispersionSummary& s);
nlohmann::json to_json(const ParaphrasePivotRow& row);
nlohmann::json to_json(const ClassificationMetrics& m);
nlohmann::json to_json(const SweepRow& row);
nlohmann::json to_json(const ReliabilityBin& bin);
nlohmann::json to_json(const CalibrationResult& r);
nlohmann::json to_json(const EvaluationBundle& b);

/// Quotes a field when it contains a comma, quote, CR or LF; quotes are doubled.
std::string csv_field(std::string_view value);

class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  void row(const std::vector<std::string>& fields);
  const std::string& str() const { return out_; }

 private:
  std::size_t columns_;
  std::string out_;
};

/// Shortest round-trip decimal; "N/A" for absent values.
std::string number(std::optional<double> v);

struct ScatterPoint {
  double original = 0.0;
  double paraphrase = 0.0;
};

std::vector<ScatterPoint> sensitivity_points(std::span<const ParaphraseSet> sets);
std::string sensitivity_scatter_svg(std::span<const ScatterPoint> points, std::string_view title);
std::string reliability_diagram_svg(std::span<const ReliabilityBin> table, std::string_view title);

}  // namespace guardlab::report
