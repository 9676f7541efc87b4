#include "guardlab/manifest.hpp"

#include <chrono>
#include <ctime>

#include "guardlab/dataset_io.hpp"

namespace guardlab {

void RunManifest::add_input(const std::filesystem::path& path) {
  inputs.emplace_back(path.string(), file_sha256(path));
}

std::string utc_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json inputs = nlohmann::json::array();
  for (const auto& [path, digest] : m.inputs) inputs.push_back({{"path", path}, {"sha256", digest}});
  return {{"command_line", m.command_line},
          {"config", m.config},
          {"inputs", std::move(inputs)},
          {"seed", m.seed ? nlohmann::json(*m.seed) : nlohmann::json(nullptr)},
          {"version", m.version},
          {"started_at", m.started_at},
          {"finished_at", m.finished_at}};
}

}  // namespace guardlab
