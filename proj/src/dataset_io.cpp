#include "guardlab/dataset_io.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace guardlab {

using nlohmann::json;

namespace {

json member_to_json(const Member& m) {
  json j = json::object();
  j["text"] = m.text;
  if (m.score) j["score"] = *m.score;
  if (m.style) j["style"] = *m.style;
  if (m.error) j["error"] = *m.error;
  return j;
}

Member member_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, where + ": member must be an object");
  Member m;
  auto text = j.find("text");
  if (text == j.end() || !text->is_string()) {
    throw Error(ErrorKind::Schema, where + ": missing string field 'text'");
  }
  m.text = text->get<std::string>();
  if (auto s = j.find("score"); s != j.end() && !s->is_null()) {
    if (!s->is_number()) throw Error(ErrorKind::Schema, where + ": 'score' must be a number");
    const double v = s->get<double>();
    if (!is_valid_score(v)) throw Error(ErrorKind::Schema, where + ": 'score' outside [0, 1]");
    m.score = v;
  }
  if (auto s = j.find("style"); s != j.end() && !s->is_null()) {
    if (!s->is_string()) throw Error(ErrorKind::Schema, where + ": 'style' must be a string");
    m.style = s->get<std::string>();
  }
  if (auto e = j.find("error"); e != j.end() && e->is_string()) m.error = e->get<std::string>();
  return m;
}

}  // namespace

json to_json(const ParaphraseSet& set) {
  json j = json::object();
  j["id"] = set.id;
  if (set.prompt) j["prompt"] = *set.prompt;
  j["original"] = member_to_json(set.original);
  json paras = json::array();
  for (const auto& m : set.paraphrases) paras.push_back(member_to_json(m));
  j["paraphrases"] = std::move(paras);
  j["gold_label"] = set.gold_label ? json(std::string(to_string(*set.gold_label))) : json(nullptr);
  return j;
}

ParaphraseSet set_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorKind::Schema, where + ": expected a JSON object");
  ParaphraseSet set;
  auto id = j.find("id");
  if (id == j.end() || !id->is_string()) {
    throw Error(ErrorKind::Schema, where + ": missing string field 'id'");
  }
  set.id = id->get<std::string>();
  if (auto p = j.find("prompt"); p != j.end() && !p->is_null()) {
    if (!p->is_string()) throw Error(ErrorKind::Schema, where + ": 'prompt' must be a string");
    set.prompt = p->get<std::string>();
  }
  auto orig = j.find("original");
  if (orig == j.end()) throw Error(ErrorKind::Schema, where + ": missing field 'original'");
  set.original = member_from_json(*orig, where + " original");
  auto paras = j.find("paraphrases");
  if (paras == j.end() || !paras->is_array()) {
    throw Error(ErrorKind::Schema, where + ": missing array field 'paraphrases'");
  }
  for (std::size_t i = 0; i < paras->size(); ++i) {
    set.paraphrases.push_back(
        member_from_json((*paras)[i], where + " paraphrase " + std::to_string(i)));
  }
  if (auto g = j.find("gold_label"); g != j.end() && !g->is_null()) {
    auto label = g->is_string() ? parse_label(g->get<std::string>()) : std::nullopt;
    if (!label) throw Error(ErrorKind::Schema, where + ": 'gold_label' must be safe|unsafe|null");
    set.gold_label = label;
  }
  return set;
}

void for_each_jsonl(std::istream& in, const std::string& source,
                    const std::function<void(const json&, std::size_t)>& on_line) {
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw Error(ErrorKind::Parse,
                  source + ":" + std::to_string(line_no) + ": malformed JSON (" + e.what() + ")");
    }
    on_line(j, line_no);
  }
}

void for_each_jsonl(const std::filesystem::path& path,
                    const std::function<void(const json&, std::size_t)>& on_line) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  for_each_jsonl(in, path.string(), on_line);
}

std::vector<ParaphraseSet> parse_sets(std::istream& in, const std::string& source,
                                      ScoreRequirement scores) {
  std::vector<ParaphraseSet> sets;
  for_each_jsonl(in, source, [&](const json& j, std::size_t line) {
    const std::string where = source + ":" + std::to_string(line);
    auto set = set_from_json(j, where);
    if (scores == ScoreRequirement::Required && !set.fully_scored()) {
      if (set.any_scored()) {
        throw Error(ErrorKind::PartialScores,
                    where + ": set '" + set.id + "' mixes scored and unscored members");
      }
      throw Error(ErrorKind::Unscored, where + ": set '" + set.id + "' has no scores");
    }
    sets.push_back(std::move(set));
  });
  return sets;
}

std::vector<ParaphraseSet> load_sets(const std::filesystem::path& path, ScoreRequirement scores) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  return parse_sets(in, path.string(), scores);
}

std::string dump_sets(const std::vector<ParaphraseSet>& sets) {
  std::string out;
  for (const auto& s : sets) {
    out += to_json(s).dump();
    out += '\n';
  }
  return out;
}

void save_sets(const std::vector<ParaphraseSet>& sets, const std::filesystem::path& path) {
  write_file_atomic(path, dump_sets(sets));
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  namespace fs = std::filesystem;
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::Io, "short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error(ErrorKind::Io, "cannot rename into " + path.string());
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string sha256_hex(std::string_view data) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(ErrorKind::Io, "sha256 failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string hex;
  hex.reserve(len * 2);
  for (unsigned int i = 0; i < len; ++i) {
    hex.push_back(kHex[digest[i] >> 4]);
    hex.push_back(kHex[digest[i] & 0xF]);
  }
  return hex;
}

std::string file_sha256(const std::filesystem::path& path) {
  return sha256_hex(read_file(path));
}

}  // namespace guardlab
