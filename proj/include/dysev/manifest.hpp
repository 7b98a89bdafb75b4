#pragma once

// Corpus manifest: JSON-lines, one utterance per line. Each entry names the
// audio and alignment files and carries the canonical and decoded phoneme
// sequences produced upstream.

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysev/common.hpp"
#include "dysev/table.hpp"

namespace dysev {

struct ManifestEntry {
  std::string utterance_id, speaker_id, language, sentence_id;
  Severity severity = Severity::Mild;
  std::string wav_path, textgrid_path;
  std::vector<std::string> canonical_phones, decoded_phones;

  bool operator==(const ManifestEntry&) const = default;
};

namespace detail {

inline std::vector<std::string> split_ws(const std::string& s) {
  std::vector<std::string> out;
  std::istringstream in(s);
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

inline std::string manifest_string(const nlohmann::json& j, const char* key,
                                   int line) {
  if (!j.contains(key))
    throw parse_error(std::string("manifest entry lacks '") + key + "'", line);
  if (!j.at(key).is_string())
    throw parse_error(std::string("manifest field '") + key +
                          "' must be a string",
                      line);
  std::string v = j.at(key).get<std::string>();
  for (char c : v)
    if (c == ',' || c == '"' || c == '\n')
      throw parse_error(std::string("manifest field '") + key +
                            "' contains a character reserved by the CSV "
                            "outputs",
                        line);
  return v;
}

}  // namespace detail

inline std::vector<ManifestEntry> parse_manifest(const std::string& text) {
  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    bool blank = true;
    for (char c : line) blank = blank && (c == ' ' || c == '\t');
    if (blank) continue;

    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded())
      throw parse_error("manifest line is not valid JSON", line_no);
    if (!j.is_object())
      throw parse_error("manifest line is not a JSON object", line_no);

    ManifestEntry e;
    e.utterance_id = detail::manifest_string(j, "utterance_id", line_no);
    e.speaker_id = detail::manifest_string(j, "speaker_id", line_no);
    e.language = detail::manifest_string(j, "language", line_no);
    e.sentence_id = detail::manifest_string(j, "sentence_id", line_no);
    e.wav_path = detail::manifest_string(j, "wav_path", line_no);
    e.textgrid_path = detail::manifest_string(j, "textgrid_path", line_no);
    e.canonical_phones =
        detail::split_ws(detail::manifest_string(j, "canonical_phones",
                                                 line_no));
    e.decoded_phones =
        detail::split_ws(detail::manifest_string(j, "decoded_phones",
                                                 line_no));
    try {
      e.severity = severity_from_string(
          detail::manifest_string(j, "severity", line_no));
    } catch (const config_error& err) {
      throw parse_error(err.what(), line_no);
    }
    if (e.utterance_id.empty())
      throw parse_error("empty utterance_id", line_no);
    if (e.speaker_id.empty()) throw parse_error("empty speaker_id", line_no);
    if (!ids.insert(e.utterance_id).second)
      throw parse_error("duplicate utterance_id '" + e.utterance_id + "'",
                        line_no);
    entries.push_back(std::move(e));
  }
  return entries;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw io_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::vector<ManifestEntry> load_manifest(
    const std::filesystem::path& path) {
  return parse_manifest(read_text_file(path));
}

}  // namespace dysev
