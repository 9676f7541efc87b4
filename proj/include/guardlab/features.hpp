#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace guardlab {

using FeatureVector = std::vector<double>;

/// Precomputed feature vectors keyed by the SHA-256 of the member text.
class FeatureStore {
 public:
  FeatureStore() = default;

  /// Throws on non-finite entries or a dimension that differs from earlier vectors.
  void insert_hash(std::string text_sha256, FeatureVector vector);
  void insert_text(std::string_view text, FeatureVector vector);

  bool contains(std::string_view text) const;
  /// Throws Error{MissingFeature} quoting the text.
  const FeatureVector& lookup(std::string_view text) const;

  std::size_t dim() const noexcept { return dim_; }
  std::size_t size() const noexcept { return by_hash_.size(); }

  /// Adds every entry of `other`; later entries win on hash collisions.
  void merge(const FeatureStore& other);

  static FeatureStore load(const std::filesystem::path& path);
  /// One `{"text_sha256", "vector"}` line per entry, sorted by hash.
  std::string dump() const;
  void save(const std::filesystem::path& path) const;

 private:
  std::unordered_map<std::string, FeatureVector> by_hash_;
  std::size_t dim_ = 0;
};

}  // namespace guardlab
