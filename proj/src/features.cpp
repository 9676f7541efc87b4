#include "guardlab/features.hpp"

#include <algorithm>
#include <cmath>

#include "guardlab/core.hpp"
#include "guardlab/dataset_io.hpp"

namespace guardlab {

using nlohmann::json;

void FeatureStore::insert_hash(std::string text_sha256, FeatureVector vector) {
  if (vector.empty()) throw Error(ErrorKind::Schema, "feature vector is empty");
  if (!std::all_of(vector.begin(), vector.end(), [](double v) { return std::isfinite(v); })) {
    throw Error(ErrorKind::Schema, "feature vector has non-finite entries");
  }
  if (dim_ == 0) dim_ = vector.size();
  if (vector.size() != dim_) {
    throw Error(ErrorKind::DimensionMismatch, "feature vector of dimension " +
                                                  std::to_string(vector.size()) + ", expected " +
                                                  std::to_string(dim_));
  }
  by_hash_[std::move(text_sha256)] = std::move(vector);
}

void FeatureStore::insert_text(std::string_view text, FeatureVector vector) {
  insert_hash(sha256_hex(text), std::move(vector));
}

void FeatureStore::merge(const FeatureStore& other) {
  for (const auto& [hash, vector] : other.by_hash_) insert_hash(hash, vector);
}

bool FeatureStore::contains(std::string_view text) const {
  return by_hash_.count(sha256_hex(text)) != 0;
}

const FeatureVector& FeatureStore::lookup(std::string_view text) const {
  auto it = by_hash_.find(sha256_hex(text));
  if (it == by_hash_.end()) {
    throw Error(ErrorKind::MissingFeature, "no feature vector for text \"" +
                                               std::string(text.substr(0, 60)) + "\"");
  }
  return it->second;
}

FeatureStore FeatureStore::load(const std::filesystem::path& path) {
  FeatureStore store;
  for_each_jsonl(path, [&](const json& j, std::size_t line) {
    const std::string where = path.string() + ":" + std::to_string(line);
    auto hash = j.find("text_sha256");
    auto vec = j.find("vector");
    if (hash == j.end() || !hash->is_string() || vec == j.end() || !vec->is_array()) {
      throw Error(ErrorKind::Schema, where + ": expected {\"text_sha256\", \"vector\"}");
    }
    FeatureVector v;
    for (const auto& x : *vec) {
      if (!x.is_number()) throw Error(ErrorKind::Schema, where + ": vector entries must be numbers");
      v.push_back(x.get<double>());
    }
    try {
      store.insert_hash(hash->get<std::string>(), std::move(v));
    } catch (const Error& e) {
      throw Error(e.kind(), where + ": " + e.what());
    }
  });
  return store;
}

std::string FeatureStore::dump() const {
  std::vector<const std::string*> keys;
  keys.reserve(by_hash_.size());
  for (const auto& [k, _] : by_hash_) keys.push_back(&k);
  std::sort(keys.begin(), keys.end(), [](auto* a, auto* b) { return *a < *b; });
  std::string out;
  for (const auto* k : keys) {
    json j = json::object();
    j["text_sha256"] = *k;
    j["vector"] = by_hash_.at(*k);
    out += j.dump();
    out += '\n';
  }
  return out;
}

void FeatureStore::save(const std::filesystem::path& path) const { write_file_atomic(path, dump()); }

}  // namespace guardlab
