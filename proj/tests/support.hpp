#pragma once

// Shared fixtures and independent reference implementations for the tests.
// Oracles here are written from the definitions and deliberately share no
// code with the library.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "guardlab/core.hpp"

namespace testing {

inline guardlab::ParaphraseSet make_set(const std::string& id, double original,
                                        const std::vector<double>& paraphrases) {
  guardlab::ParaphraseSet s;
  s.id = id;
  s.original.text = id + "/original";
  s.original.score = original;
  for (std::size_t i = 0; i < paraphrases.size(); ++i) {
    guardlab::Member m;
    m.text = id + "/para-" + std::to_string(i);
    m.score = paraphrases[i];
    s.paraphrases.push_back(m);
  }
  return s;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("guardlab-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void spit(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

namespace oracle {

// Linear-interpolation quantile: position (n-1)q between order statistics.
inline double quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double pos = (static_cast<double>(v.size()) - 1.0) * q;
  const double below = std::floor(pos);
  const std::size_t i = static_cast<std::size_t>(below);
  if (i + 1 >= v.size()) return v.back();
  const double w = pos - below;
  return v[i] * (1.0 - w) + v[i + 1] * w;
}

inline double bowley(const std::vector<double>& v) {
  const double q1 = quantile(v, 0.25), q2 = quantile(v, 0.5), q3 = quantile(v, 0.75);
  if (q3 - q1 <= 0.0) return 0.0;
  return (q3 + q1 - 2.0 * q2) / (q3 - q1);
}

inline double log_odds(double p, double eps = 1e-6) {
  p = std::min(std::max(p, eps), 1.0 - eps);
  return std::log(p) - std::log(1.0 - p);
}

/// Reference skew-aware target on the probability scale. Returns
/// (target, percentile level, direction -1/0/+1 for left/sym/right).
struct SkewTarget {
  double target;
  double level;
  int direction;
};

inline SkewTarget skew_target(const std::vector<double>& scores, double threshold = 0.1) {
  double b = 0.0;
  if (scores.size() > 2) {
    std::vector<double> z;
    for (double p : scores) z.push_back(log_odds(p));
    b = bowley(z);
  }
  int dir = 0;
  double level = 0.40;
  if (b > threshold) {
    dir = 1;
    level = 0.25;
  } else if (b < -threshold) {
    dir = -1;
    level = 0.75;
  }
  return {quantile(scores, level), level, dir};
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline bool flips(const guardlab::ParaphraseSet& s) {
  const bool orig_safe = *s.original.score >= 0.5;
  for (const auto& m : s.paraphrases) {
    if ((*m.score >= 0.5) != orig_safe) return true;
  }
  return false;
}

}  // namespace oracle

}  // namespace testing
