#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace guardlab {

inline constexpr const char* kToolkitVersion = "0.1.0";

/// Provenance record embedded in every report.
struct RunManifest {
  std::vector<std::string> command_line;
  nlohmann::json config = nlohmann::json::object();
  /// (path as given, sha256 of its bytes), in the order inputs were read.
  std::vector<std::pair<std::string, std::string>> inputs;
  std::optional<std::uint64_t> seed;
  std::string version = kToolkitVersion;
  std::string started_at;
  std::string finished_at;

  void add_input(const std::filesystem::path& path);
};

/// UTC, second resolution, e.g. 2024-05-01T12:00:00Z.
std::string utc_timestamp();

nlohmann::json to_json(const RunManifest& manifest);

}  // namespace guardlab
