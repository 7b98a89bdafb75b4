#pragma once

// Per-language feature tables, the three cross-lingual assembly strategies
// (Intersection / Union / Proposed), sentence-level subsampling, and the
// CSV round-trip used between pipeline stages.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/features.hpp"
#include "dysev/gbdt.hpp"

namespace dysev {

enum class Severity { Mild = 0, Moderate = 1, Severe = 2 };

inline const char* to_string(Severity s) {
  switch (s) {
    case Severity::Mild: return "mild";
    case Severity::Moderate: return "moderate";
    default: return "severe";
  }
}

inline Severity severity_from_string(const std::string& s) {
  if (s == "mild") return Severity::Mild;
  if (s == "moderate") return Severity::Moderate;
  if (s == "severe") return Severity::Severe;
  throw config_error("unknown severity '" + s +
                     "' (expected mild, moderate, or severe)");
}

struct UtteranceRow {
  std::string utterance_id, speaker_id, sentence_id;
  Severity severity = Severity::Mild;
  FeatureVector features;

  bool operator==(const UtteranceRow&) const = default;
};

struct FeatureTable {
  std::string language;
  std::vector<UtteranceRow> rows;

  bool operator==(const FeatureTable&) const = default;
};

enum class Strategy { Intersection, Union, Proposed };

inline const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::Intersection: return "intersection";
    case Strategy::Union: return "union";
    default: return "proposed";
  }
}

inline Strategy strategy_from_string(const std::string& s) {
  if (s == "intersection") return Strategy::Intersection;
  if (s == "union") return Strategy::Union;
  if (s == "proposed") return Strategy::Proposed;
  throw config_error("unknown strategy '" + s +
                     "' (expected intersection, union, or proposed)");
}

struct CrossRow {
  std::string language, utterance_id, speaker_id;
  Severity severity = Severity::Mild;

  bool operator==(const CrossRow&) const = default;
};

// Combined multi-language table with an explicit per-cell mask. Speaker ids
// are only meaningful within a language, so grouping keys are
// "language:speaker".
struct CrossTable {
  Strategy strategy = Strategy::Proposed;
  std::vector<std::string> columns;
  std::vector<CrossRow> rows;
  std::vector<double> values;         // row-major
  std::vector<std::uint8_t> present;  // row-major

  std::size_t n_rows() const { return rows.size(); }
  std::size_t n_cols() const { return columns.size(); }
  double value(std::size_t i, std::size_t j) const {
    return values[i * n_cols() + j];
  }
  bool is_present(std::size_t i, std::size_t j) const {
    return present[i * n_cols() + j] != 0;
  }
  std::size_t present_cells() const {
    std::size_t n = 0;
    for (std::uint8_t p : present) n += p;
    return n;
  }

  bool operator==(const CrossTable&) const = default;
};

inline std::string group_key(const CrossRow& r) {
  return r.language + ":" + r.speaker_id;
}

// Keeps the canonical Table IV ordering for any feature subset.
inline std::vector<std::string> canonical_order(
    const std::set<std::string>& subset) {
  std::vector<std::string> out;
  for (const std::string& name : feature_names())
    if (subset.count(name)) out.push_back(name);
  if (out.size() != subset.size())
    for (const std::string& name : subset)
      if (feature_index(name) < 0)
        throw config_error("unknown feature name '" + name + "'");
  return out;
}

// Builds the cross-lingual table. `sets` maps language to its selected
// feature set F_l. A cell (row of language l, feature f) is present iff the
// value was extracted and, additionally for Intersection, f is in every
// language's set, or, for Proposed, f is in F_l.
inline CrossTable assemble(
    const std::vector<FeatureTable>& tables,
    const std::map<std::string, std::set<std::string>>& sets,
    Strategy strategy) {
  if (tables.empty()) throw config_error("no language tables to assemble");
  std::set<std::string> seen_languages;
  for (const FeatureTable& t : tables) {
    if (!seen_languages.insert(t.language).second)
      throw config_error("duplicate language '" + t.language + "'");
    if (!sets.count(t.language))
      throw config_error("no selected feature set for language '" +
                         t.language + "'");
  }

  std::set<std::string> union_set, inter_set;
  bool first = true;
  for (const FeatureTable& t : tables) {
    const std::set<std::string>& fl = sets.at(t.language);
    union_set.insert(fl.begin(), fl.end());
    if (first) {
      inter_set = fl;
      first = false;
    } else {
      std::set<std::string> keep;
      for (const std::string& f : fl)
        if (inter_set.count(f)) keep.insert(f);
      inter_set = std::move(keep);
    }
  }

  // Every selected feature must have been extracted at least once for its
  // language; otherwise the selection file and the table disagree.
  for (const FeatureTable& t : tables) {
    for (const std::string& f : sets.at(t.language)) {
      int idx = feature_index(f);
      if (idx < 0)
        throw config_error("unknown feature name '" + f + "'");
      bool any = false;
      for (const UtteranceRow& r : t.rows)
        any = any || r.features.values[idx].has_value();
      if (!any)
        throw config_error("feature '" + f + "' was selected for language '" +
                           t.language + "' but never extracted");
    }
  }

  CrossTable ct;
  ct.strategy = strategy;
  ct.columns = canonical_order(strategy == Strategy::Intersection ? inter_set
                                                                  : union_set);
  const std::size_t d = ct.columns.size();
  for (const FeatureTable& t : tables) {
    const std::set<std::string>& fl = sets.at(t.language);
    for (const UtteranceRow& r : t.rows) {
      ct.rows.push_back({t.language, r.utterance_id, r.speaker_id,
                         r.severity});
      for (std::size_t j = 0; j < d; ++j) {
        const std::string& f = ct.columns[j];
        const auto& slot = r.features.values[feature_index(f)];
        bool keep = slot.has_value();
        if (strategy == Strategy::Proposed) keep = keep && fl.count(f) > 0;
        ct.values.push_back(keep ? *slot : 0.0);
        ct.present.push_back(keep ? 1 : 0);
      }
    }
  }
  return ct;
}

// Deterministic sentence-level subsample: all speakers keep the same sampled
// sentences. Sentences are shuffled by a seeded Fisher-Yates over their
// sorted ids; round(fraction * n) of them are kept.
inline FeatureTable subsample_language(const FeatureTable& t, double fraction,
                                       std::uint64_t seed) {
  if (!(fraction > 0.0) || fraction > 1.0)
    throw config_error("fraction must be in (0, 1]");
  std::set<std::string> distinct;
  for (const UtteranceRow& r : t.rows) {
    if (r.sentence_id.empty())
      throw config_error("utterance '" + r.utterance_id +
                         "' has no sentence id");
    distinct.insert(r.sentence_id);
  }
  std::vector<std::string> ids(distinct.begin(), distinct.end());
  const auto k = static_cast<std::size_t>(
      std::lrint(fraction * static_cast<double>(ids.size())));
  if (k == 0)
    throw config_error("fraction " + std::to_string(fraction) +
                       " keeps none of the " + std::to_string(ids.size()) +
                       " sentences");

  std::mt19937_64 rng(seed);
  for (std::size_t i = ids.size(); i > 1; --i)
    std::swap(ids[i - 1], ids[rng() % i]);
  std::set<std::string> keep(ids.begin(), ids.begin() + k);

  FeatureTable out;
  out.language = t.language;
  for (const UtteranceRow& r : t.rows)
    if (keep.count(r.sentence_id)) out.rows.push_back(r);
  return out;
}

// Training view of a monolingual table over the given columns; rows keep
// their order, groups are speaker ids.
inline TrainMatrix to_matrix(const FeatureTable& t,
                             const std::vector<std::string>& columns) {
  TrainMatrix m;
  m.column_names = columns;
  m.resize(t.rows.size(), columns.size());
  std::vector<int> idx;
  for (const std::string& c : columns) {
    int i = feature_index(c);
    if (i < 0) throw config_error("unknown feature name '" + c + "'");
    idx.push_back(i);
  }
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const UtteranceRow& row = t.rows[r];
    m.labels[r] = static_cast<int>(row.severity);
    m.groups[r] = row.speaker_id;
    for (std::size_t j = 0; j < columns.size(); ++j) {
      const auto& slot = row.features.values[idx[j]];
      if (slot)
        m.set(r, j, *slot);
      else
        m.set_missing(r, j);
    }
  }
  return m;
}

inline TrainMatrix to_matrix(const CrossTable& ct) {
  TrainMatrix m;
  m.column_names = ct.columns;
  m.resize(ct.n_rows(), ct.n_cols());
  for (std::size_t r = 0; r < ct.n_rows(); ++r) {
    m.labels[r] = static_cast<int>(ct.rows[r].severity);
    m.groups[r] = group_key(ct.rows[r]);
    for (std::size_t j = 0; j < ct.n_cols(); ++j) {
      if (ct.is_present(r, j))
        m.set(r, j, ct.value(r, j));
      else
        m.set_missing(r, j);
    }
  }
  return m;
}

namespace detail {

inline std::string csv_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace detail

// One row per utterance: metadata, the 39 canonical columns, and the 26
// MFCC statistics. Missing values are empty cells.
inline std::string feature_table_to_csv(const FeatureTable& t) {
  std::string out = "language,utterance_id,speaker_id,sentence_id,severity";
  for (const std::string& name : feature_names()) out += "," + name;
  for (const std::string& name : mfcc_stat_names()) out += "," + name;
  out += "\n";
  for (const UtteranceRow& r : t.rows) {
    out += t.language + "," + r.utterance_id + "," + r.speaker_id + "," +
           r.sentence_id + "," + to_string(r.severity);
    for (const auto& v : r.features.values)
      out += v ? "," + detail::csv_double(*v) : ",";
    for (int j = 0; j < kMfccStatCount; ++j)
      out += r.features.mfcc ? "," + detail::csv_double((*r.features.mfcc)[j])
                             : ",";
    out += "\n";
  }
  return out;
}

inline FeatureTable feature_table_from_csv(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (char c : text) {
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) lines.push_back(cur);

  // Artifact files may carry leading "# ..." stamp lines.
  std::size_t first = 0;
  while (first < lines.size() &&
         (lines[first].empty() || lines[first][0] == '#'))
    ++first;
  if (first == lines.size()) throw parse_error("empty feature CSV", 1);

  const std::vector<std::string> header = detail::split_csv_line(lines[first]);
  std::string expected = "language,utterance_id,speaker_id,sentence_id,severity";
  for (const std::string& name : feature_names()) expected += "," + name;
  for (const std::string& name : mfcc_stat_names()) expected += "," + name;
  if (lines[first] != expected && detail::split_csv_line(expected) != header)
    throw parse_error("feature CSV header does not match the canonical columns",
                      static_cast<int>(first + 1));

  FeatureTable t;
  for (std::size_t ln = first + 1; ln < lines.size(); ++ln) {
    if (lines[ln].empty()) continue;
    std::vector<std::string> cells = detail::split_csv_line(lines[ln]);
    if (cells.size() != header.size())
      throw parse_error("expected " + std::to_string(header.size()) +
                            " cells, got " + std::to_string(cells.size()),
                        static_cast<int>(ln + 1));
    UtteranceRow r;
    if (t.rows.empty())
      t.language = cells[0];
    else if (cells[0] != t.language)
      throw parse_error("mixed languages in one feature table",
                        static_cast<int>(ln + 1));
    r.utterance_id = cells[1];
    r.speaker_id = cells[2];
    r.sentence_id = cells[3];
    r.severity = severity_from_string(cells[4]);
    auto num = [&](const std::string& cell) {
      char* end = nullptr;
      double v = std::strtod(cell.c_str(), &end);
      if (end != cell.c_str() + cell.size())
        throw parse_error("bad number '" + cell + "'",
                          static_cast<int>(ln + 1));
      return v;
    };
    for (int j = 0; j < kFeatureCount; ++j) {
      const std::string& cell = cells[5 + j];
      if (!cell.empty()) r.features.values[j] = num(cell);
    }
    bool any_mfcc = false;
    std::array<double, kMfccStatCount> block{};
    for (int j = 0; j < kMfccStatCount; ++j) {
      const std::string& cell = cells[5 + kFeatureCount + j];
      if (!cell.empty()) {
        block[j] = num(cell);
        any_mfcc = true;
      }
    }
    if (any_mfcc) r.features.mfcc = block;
    t.rows.push_back(std::move(r));
  }
  return t;
}

}  // namespace dysev
