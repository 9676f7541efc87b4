#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "guardlab/core.hpp"

namespace guardlab {

enum class ScoreRequirement { Optional, Required };

nlohmann::json to_json(const ParaphraseSet& set);

/// Throws Error{Schema} for missing/mistyped fields. `where` prefixes messages.
ParaphraseSet set_from_json(const nlohmann::json& j, const std::string& where);

/// Calls `on_line` for every non-blank line of a JSONL stream. Malformed JSON
/// raises Error{Parse} with `<source>:<line>`.
void for_each_jsonl(std::istream& in, const std::string& source,
                    const std::function<void(const nlohmann::json&, std::size_t line)>& on_line);
void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const nlohmann::json&, std::size_t line)>& on_line);

std::vector<ParaphraseSet> parse_sets(std::istream& in, const std::string& source,
                                      ScoreRequirement scores = ScoreRequirement::Optional);
std::vector<ParaphraseSet> load_sets(const std::filesystem::path& path,
                                     ScoreRequirement scores = ScoreRequirement::Optional);

std::string dump_sets(const std::vector<ParaphraseSet>& sets);
void save_sets(const std::vector<ParaphraseSet>& sets, const std::filesystem::path& path);

/// Writes via a sibling temp file and rename, so readers never observe a
/// partially written file.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);
std::string read_file(const std::filesystem::path& path);

std::string sha256_hex(std::string_view data);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace guardlab
