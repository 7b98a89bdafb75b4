#pragma once

// Praat TextGrid text parser (long and short form), tier classification into
// vocalic / consonantal / silence runs, and the per-language phone-class map.
// The accepted grammar is documented in docs/textgrid_format.md.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "dysev/common.hpp"

namespace dysev {

struct Interval {
  std::string label;  // empty = silence
  double xmin = 0.0;
  double xmax = 0.0;

  bool operator==(const Interval&) const = default;
};

struct Tier {
  std::string name;
  double xmin = 0.0;
  double xmax = 0.0;
  std::vector<Interval> intervals;  // sorted, contiguous, non-overlapping

  bool operator==(const Tier&) const = default;
  double duration() const { return xmax - xmin; }
};

enum class PhoneClass { Vowel, Consonant, Silence };
enum class CornerVowel { I, AE, A, U };

inline const char* to_string(PhoneClass c) {
  switch (c) {
    case PhoneClass::Vowel: return "vowel";
    case PhoneClass::Consonant: return "consonant";
    default: return "silence";
  }
}

inline const char* to_string(CornerVowel c) {
  switch (c) {
    case CornerVowel::I: return "i";
    case CornerVowel::AE: return "ae";
    case CornerVowel::A: return "a";
    default: return "u";
  }
}

// Per-language phone inventory: class of every phone label, which labels are
// corner vowels, and the front/back pair used for the F2 ratio.
struct PhoneClassMap {
  std::string language;
  std::map<std::string, PhoneClass> class_of;
  std::map<std::string, CornerVowel> corner_of;  // partial
  std::string front_label;  // F2-ratio numerator vowel
  std::string back_label;   // F2-ratio denominator vowel

  // Throws config_error when the invariants do not hold.
  void validate() const {
    for (const auto& [label, corner] : corner_of) {
      auto it = class_of.find(label);
      if (it == class_of.end() || it->second != PhoneClass::Vowel)
        throw config_error("corner vowel label '" + label +
                           "' is not classified as a vowel");
      (void)corner;
    }
    for (const std::string& l : {front_label, back_label}) {
      if (l.empty()) continue;
      auto it = class_of.find(l);
      if (it == class_of.end() || it->second != PhoneClass::Vowel)
        throw config_error("F2-pair label '" + l +
                           "' is not classified as a vowel");
    }
  }

  PhoneClass classify(const std::string& label) const {
    auto it = class_of.find(label);
    if (it == class_of.end())
      throw config_error("phone label '" + label +
                         "' is not in the phone-class map for language '" +
                         language + "'");
    return it->second;
  }
};

struct SegmentRun {
  PhoneClass cls = PhoneClass::Silence;
  double start = 0.0;
  double end = 0.0;

  double duration() const { return end - start; }
  bool operator==(const SegmentRun&) const = default;
};

namespace detail {

// Boundary slack when checking tier contiguity. Praat emits exact decimal
// boundaries so honest files match bit-for-bit; the slack only absorbs
// last-digit formatting noise.
inline constexpr double kBoundaryTol = 1e-9;

inline std::string utf16_to_utf8(const std::string& raw, bool big_endian) {
  if (raw.size() % 2 != 0)
    throw parse_error("truncated UTF-16 content", 1);
  std::vector<unsigned> units;
  units.reserve(raw.size() / 2);
  for (std::size_t i = 0; i < raw.size(); i += 2) {
    unsigned lo = static_cast<unsigned char>(raw[i]);
    unsigned hi = static_cast<unsigned char>(raw[i + 1]);
    units.push_back(big_endian ? (lo << 8 | hi) : (hi << 8 | lo));
  }
  std::string out;
  for (std::size_t i = 0; i < units.size(); ++i) {
    unsigned cp = units[i];
    if (cp >= 0xD800 && cp <= 0xDBFF) {
      if (i + 1 >= units.size() || units[i + 1] < 0xDC00 ||
          units[i + 1] > 0xDFFF)
        throw parse_error("unpaired UTF-16 surrogate", 1);
      cp = 0x10000 + ((cp - 0xD800) << 10) + (units[i + 1] - 0xDC00);
      ++i;
    }
    if (cp < 0x80) {
      out.push_back(static_cast<char>(cp));
    } else if (cp < 0x800) {
      out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else if (cp < 0x10000) {
      out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    } else {
      out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
      out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
    }
  }
  return out;
}

inline std::string decode_textgrid_bytes(const std::string& raw) {
  auto b = [&](std::size_t i) { return static_cast<unsigned char>(raw[i]); };
  if (raw.size() >= 2 && b(0) == 0xFF && b(1) == 0xFE)
    return utf16_to_utf8(raw.substr(2), false);
  if (raw.size() >= 2 && b(0) == 0xFE && b(1) == 0xFF)
    return utf16_to_utf8(raw.substr(2), true);
  if (raw.size() >= 3 && b(0) == 0xEF && b(1) == 0xBB && b(2) == 0xBF)
    return raw.substr(3);
  return raw;
}

inline std::vector<std::string> split_lines(const std::string& text) {
  std::vector<std::string> lines;
  std::string cur;
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      lines.push_back(cur);
      cur.clear();
    } else if (c == '\r') {
      if (i + 1 < text.size() && text[i + 1] == '\n') ++i;
      lines.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  lines.push_back(cur);
  return lines;
}

inline bool is_blank(const std::string& s) {
  return s.find_first_not_of(" \t") == std::string::npos;
}

inline std::string trim(const std::string& s) {
  auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

// Cursor over decoded lines; pos is the intra-line offset used while a
// quoted string spans multiple lines.
struct TgCursor {
  std::vector<std::string> lines;
  std::size_t line = 0;
  std::size_t pos = 0;

  int human_line() const { return static_cast<int>(line) + 1; }

  bool eof() const { return line >= lines.size(); }

  void advance_line() {
    ++line;
    pos = 0;
  }

  // Move to the next line that has content (beyond the current position).
  void skip_blank() {
    while (!eof()) {
      const std::string& l = lines[line];
      auto rest = l.find_first_not_of(" \t", pos);
      if (rest != std::string::npos) {
        pos = rest;
        return;
      }
      advance_line();
    }
  }
};

inline bool parse_full_number(const std::string& tok, double* out) {
  const char* s = tok.c_str();
  char* end = nullptr;
  double v = std::strtod(s, &end);
  if (end == s) return false;
  while (*end == ' ' || *end == '\t') ++end;
  if (*end != '\0') return false;
  *out = v;
  return true;
}

// Reads a quoted string starting at the cursor. Praat escapes a double quote
// by doubling it; the string may span lines (embedded newlines).
inline std::string read_quoted(TgCursor& c) {
  c.skip_blank();
  if (c.eof()) throw parse_error("expected string, found end of file",
                                 static_cast<int>(c.lines.size()));
  int start_line = c.human_line();
  if (c.lines[c.line][c.pos] != '"')
    throw parse_error("expected opening '\"'", start_line);
  ++c.pos;
  std::string out;
  while (true) {
    if (c.eof())
      throw parse_error("unterminated string starting", start_line);
    const std::string& l = c.lines[c.line];
    if (c.pos >= l.size()) {
      // String continues on the next line.
      out.push_back('\n');
      c.advance_line();
      if (c.eof())
        throw parse_error("unterminated string starting", start_line);
      continue;
    }
    char ch = l[c.pos];
    if (ch == '"') {
      if (c.pos + 1 < l.size() && l[c.pos + 1] == '"') {
        out.push_back('"');
        c.pos += 2;
        continue;
      }
      ++c.pos;
      return out;
    }
    out.push_back(ch);
    ++c.pos;
  }
}

// ---- short format -------------------------------------------------------

inline double short_number(TgCursor& c, const char* what) {
  c.skip_blank();
  if (c.eof())
    throw parse_error(std::string("expected ") + what + ", found end of file",
                      static_cast<int>(c.lines.size()));
  std::string tok = trim(c.lines[c.line].substr(c.pos));
  double v;
  if (!parse_full_number(tok, &v))
    throw parse_error(std::string("expected ") + what + ", got '" + tok + "'",
                      c.human_line());
  c.advance_line();
  return v;
}

inline std::string short_string(TgCursor& c) {
  std::string s = read_quoted(c);
  // Nothing else is allowed on the line after the closing quote.
  if (!is_blank(c.lines[c.line].substr(c.pos)))
    throw parse_error("unexpected trailing content after string",
                      c.human_line());
  c.advance_line();
  return s;
}

// ---- long format --------------------------------------------------------

// Matches `key = <number>` (also `key: size = <n>` via key="intervals: size").
inline double long_key_number(TgCursor& c, const std::string& key) {
  c.skip_blank();
  if (c.eof())
    throw parse_error("expected '" + key + " = ...', found end of file",
                      static_cast<int>(c.lines.size()));
  std::string l = trim(c.lines[c.line].substr(c.pos));
  auto eq = l.find('=');
  if (eq == std::string::npos || trim(l.substr(0, eq)) != key)
    throw parse_error("expected '" + key + " = ...', got '" + l + "'",
                      c.human_line());
  double v;
  if (!parse_full_number(trim(l.substr(eq + 1)), &v))
    throw parse_error("bad number for '" + key + "'", c.human_line());
  c.advance_line();
  return v;
}

inline std::string long_key_string(TgCursor& c, const std::string& key) {
  c.skip_blank();
  if (c.eof())
    throw parse_error("expected '" + key + " = \"...\"', found end of file",
                      static_cast<int>(c.lines.size()));
  std::string l = c.lines[c.line];
  auto rel = trim(l.substr(c.pos));
  auto eq = rel.find('=');
  if (eq == std::string::npos || trim(rel.substr(0, eq)) != key)
    throw parse_error("expected '" + key + " = \"...\"', got '" + rel + "'",
                      c.human_line());
  // Position the cursor at the opening quote, then share the string reader.
  c.pos = l.find('=', c.pos) + 1;
  std::string s = read_quoted(c);
  if (!is_blank(c.lines[c.line].substr(c.pos)))
    throw parse_error("unexpected trailing content after string",
                      c.human_line());
  c.advance_line();
  return s;
}

// Matches `name [index]:` headers such as `item [1]:` / `intervals [2]:`.
inline void long_item_header(TgCursor& c, const std::string& name) {
  c.skip_blank();
  if (c.eof())
    throw parse_error("expected '" + name + " [..]:', found end of file",
                      static_cast<int>(c.lines.size()));
  std::string l = trim(c.lines[c.line].substr(c.pos));
  if (l.rfind(name, 0) != 0 || l.find('[') == std::string::npos ||
      l.back() != ':')
    throw parse_error("expected '" + name + " [..]:', got '" + l + "'",
                      c.human_line());
  c.advance_line();
}

inline bool peek_is(TgCursor c, const std::string& prefix) {
  c.skip_blank();
  if (c.eof()) return false;
  return trim(c.lines[c.line].substr(c.pos)).rfind(prefix, 0) == 0;
}

inline void validate_tier(Tier& t, int line_hint) {
  if (t.intervals.empty()) return;
  if (std::abs(t.intervals.front().xmin - t.xmin) > kBoundaryTol)
    throw parse_error("tier '" + t.name +
                          "': first interval does not start at tier xmin",
                      line_hint);
  t.intervals.front().xmin = t.xmin;
  for (std::size_t i = 0; i < t.intervals.size(); ++i) {
    Interval& iv = t.intervals[i];
    if (!(iv.xmax > iv.xmin))
      throw parse_error("tier '" + t.name + "': interval " +
                            std::to_string(i + 1) +
                            " has xmax <= xmin",
                        line_hint);
    if (i > 0) {
      double gap = iv.xmin - t.intervals[i - 1].xmax;
      if (std::abs(gap) > kBoundaryTol)
        throw parse_error("tier '" + t.name + "': " +
                              (gap > 0 ? "gap" : "overlap") +
                              " between intervals " + std::to_string(i) +
                              " and " + std::to_string(i + 1),
                          line_hint);
      iv.xmin = t.intervals[i - 1].xmax;  // snap to exact contiguity
    }
  }
  if (std::abs(t.intervals.back().xmax - t.xmax) > kBoundaryTol)
    throw parse_error("tier '" + t.name +
                          "': last interval does not end at tier xmax",
                      line_hint);
  t.intervals.back().xmax = t.xmax;
}

inline std::vector<Tier> parse_long(TgCursor& c) {
  long_key_number(c, "xmin");
  long_key_number(c, "xmax");
  c.skip_blank();
  if (c.eof()) throw parse_error("expected 'tiers?' flag, found end of file",
                                 static_cast<int>(c.lines.size()));
  {
    std::string l = trim(c.lines[c.line].substr(c.pos));
    if (l.rfind("tiers?", 0) != 0)
      throw parse_error("expected 'tiers? <exists>' flag, got '" + l + "'",
                        c.human_line());
    if (l.find("<absent>") != std::string::npos) return {};
    if (l.find("<exists>") == std::string::npos)
      throw parse_error("expected '<exists>' or '<absent>'", c.human_line());
    c.advance_line();
  }
  double size_d = long_key_number(c, "size");
  int n_tiers = static_cast<int>(size_d);
  if (n_tiers < 0 || size_d != n_tiers)
    throw parse_error("bad tier count", c.human_line());
  if (peek_is(c, "item []"))
    c.advance_line();  // collection header, optional
  std::vector<Tier> tiers;
  for (int k = 0; k < n_tiers; ++k) {
    long_item_header(c, "item");
    std::string cls = long_key_string(c, "class");
    Tier t;
    t.name = long_key_string(c, "name");
    t.xmin = long_key_number(c, "xmin");
    t.xmax = long_key_number(c, "xmax");
    int decl_line = c.human_line();
    if (cls == "IntervalTier") {
      double n_d = long_key_number(c, "intervals: size");
      int n = static_cast<int>(n_d);
      if (n < 0 || n_d != n) throw parse_error("bad interval count", decl_line);
      for (int j = 0; j < n; ++j) {
        long_item_header(c, "intervals");
        Interval iv;
        iv.xmin = long_key_number(c, "xmin");
        iv.xmax = long_key_number(c, "xmax");
        iv.label = long_key_string(c, "text");
        t.intervals.push_back(std::move(iv));
      }
      validate_tier(t, decl_line);
      tiers.push_back(std::move(t));
    } else if (cls == "TextTier") {
      // Point tier: parse to keep the cursor in sync, then drop it.
      double n_d = long_key_number(c, "points: size");
      int n = static_cast<int>(n_d);
      if (n < 0 || n_d != n) throw parse_error("bad point count", decl_line);
      for (int j = 0; j < n; ++j) {
        long_item_header(c, "points");
        long_key_number(c, "number");
        long_key_string(c, "mark");
      }
    } else {
      throw parse_error("unknown tier class \"" + cls + "\"", decl_line);
    }
  }
  return tiers;
}

inline std::vector<Tier> parse_short(TgCursor& c) {
  short_number(c, "grid xmin");
  short_number(c, "grid xmax");
  c.skip_blank();
  if (c.eof()) throw parse_error("expected '<exists>' flag, found end of file",
                                 static_cast<int>(c.lines.size()));
  {
    std::string l = trim(c.lines[c.line].substr(c.pos));
    if (l == "<absent>") return {};
    if (l != "<exists>")
      throw parse_error("expected '<exists>' or '<absent>', got '" + l + "'",
                        c.human_line());
    c.advance_line();
  }
  double size_d = short_number(c, "tier count");
  int n_tiers = static_cast<int>(size_d);
  if (n_tiers < 0 || size_d != n_tiers)
    throw parse_error("bad tier count", c.human_line());
  std::vector<Tier> tiers;
  for (int k = 0; k < n_tiers; ++k) {
    int decl_line = c.human_line();
    std::string cls = short_string(c);
    Tier t;
    t.name = short_string(c);
    t.xmin = short_number(c, "tier xmin");
    t.xmax = short_number(c, "tier xmax");
    double n_d = short_number(c, "element count");
    int n = static_cast<int>(n_d);
    if (n < 0 || n_d != n) throw parse_error("bad element count", decl_line);
    if (cls == "IntervalTier") {
      for (int j = 0; j < n; ++j) {
        Interval iv;
        iv.xmin = short_number(c, "interval xmin");
        iv.xmax = short_number(c, "interval xmax");
        iv.label = short_string(c);
        t.intervals.push_back(std::move(iv));
      }
      validate_tier(t, decl_line);
      tiers.push_back(std::move(t));
    } else if (cls == "TextTier") {
      for (int j = 0; j < n; ++j) {
        short_number(c, "point time");
        short_string(c);
      }
    } else {
      throw parse_error("unknown tier class \"" + cls + "\"", decl_line);
    }
  }
  return tiers;
}

// Shortest decimal form that parses back to the same double.
inline std::string fmt_double(double v) {
  char buf[40];
  for (int prec = 15; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) return buf;
  }
  return buf;
}

inline std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char ch : s) {
    out.push_back(ch);
    if (ch == '"') out.push_back('"');
  }
  out.push_back('"');
  return out;
}

}  // namespace detail

// Parses Praat TextGrid text (long or short form, UTF-8 or UTF-16).
// Interval tiers are returned in file order; point tiers are ignored.
inline std::vector<Tier> parse_textgrid(const std::string& text) {
  using namespace detail;
  TgCursor c{split_lines(decode_textgrid_bytes(text))};
  c.skip_blank();
  if (c.eof() || trim(c.lines[c.line]) != "File type = \"ooTextFile\"")
    throw parse_error("malformed header: expected File type = \"ooTextFile\"",
                      c.eof() ? 1 : c.human_line());
  c.advance_line();
  c.skip_blank();
  if (c.eof() || trim(c.lines[c.line]) != "Object class = \"TextGrid\"")
    throw parse_error("malformed header: expected Object class = \"TextGrid\"",
                      c.eof() ? 2 : c.human_line());
  c.advance_line();
  c.skip_blank();
  if (c.eof()) throw parse_error("empty TextGrid body",
                                 static_cast<int>(c.lines.size()));
  // Long form continues with `xmin = ...`; short form with a bare number.
  std::string first = trim(c.lines[c.line].substr(c.pos));
  if (first.rfind("xmin", 0) == 0) return parse_long(c);
  return parse_short(c);
}

enum class TextGridFormat { Long, Short };

// Writes the tiers back out in Praat text form. Used for round-trip checks
// and for tooling; numbers are printed so they re-parse bit-exactly.
inline std::string serialize_textgrid(const std::vector<Tier>& tiers,
                                      TextGridFormat format) {
  using namespace detail;
  double xmin = 0.0, xmax = 0.0;
  if (!tiers.empty()) {
    xmin = tiers.front().xmin;
    xmax = tiers.front().xmax;
    for (const Tier& t : tiers) {
      xmin = std::min(xmin, t.xmin);
      xmax = std::max(xmax, t.xmax);
    }
  }
  std::string out;
  out += "File type = \"ooTextFile\"\n";
  out += "Object class = \"TextGrid\"\n\n";
  if (format == TextGridFormat::Short) {
    out += fmt_double(xmin) + "\n" + fmt_double(xmax) + "\n";
    out += "<exists>\n";
    out += std::to_string(tiers.size()) + "\n";
    for (const Tier& t : tiers) {
      out += "\"IntervalTier\"\n";
      out += quote(t.name) + "\n";
      out += fmt_double(t.xmin) + "\n" + fmt_double(t.xmax) + "\n";
      out += std::to_string(t.intervals.size()) + "\n";
      for (const Interval& iv : t.intervals) {
        out += fmt_double(iv.xmin) + "\n" + fmt_double(iv.xmax) + "\n";
        out += quote(iv.label) + "\n";
      }
    }
    return out;
  }
  out += "xmin = " + fmt_double(xmin) + "\n";
  out += "xmax = " + fmt_double(xmax) + "\n";
  out += "tiers? <exists>\n";
  out += "size = " + std::to_string(tiers.size()) + "\n";
  out += "item []:\n";
  for (std::size_t k = 0; k < tiers.size(); ++k) {
    const Tier& t = tiers[k];
    out += "    item [" + std::to_string(k + 1) + "]:\n";
    out += "        class = \"IntervalTier\"\n";
    out += "        name = " + quote(t.name) + "\n";
    out += "        xmin = " + fmt_double(t.xmin) + "\n";
    out += "        xmax = " + fmt_double(t.xmax) + "\n";
    out += "        intervals: size = " + std::to_string(t.intervals.size()) +
           "\n";
    for (std::size_t j = 0; j < t.intervals.size(); ++j) {
      const Interval& iv = t.intervals[j];
      out += "        intervals [" + std::to_string(j + 1) + "]:\n";
      out += "            xmin = " + fmt_double(iv.xmin) + "\n";
      out += "            xmax = " + fmt_double(iv.xmax) + "\n";
      out += "            text = " + quote(iv.label) + "\n";
    }
  }
  return out;
}

// Maps each phone interval to its class and merges adjacent intervals of the
// same class into one run. Empty (and whitespace-only) labels are silence.
inline std::vector<SegmentRun> classify_runs(const Tier& tier,
                                             const PhoneClassMap& map) {
  std::vector<SegmentRun> runs;
  for (const Interval& iv : tier.intervals) {
    std::string label = detail::trim(iv.label);
    PhoneClass cls =
        label.empty() ? PhoneClass::Silence : map.classify(label);
    if (!runs.empty() && runs.back().cls == cls)
      runs.back().end = iv.xmax;
    else
      runs.push_back({cls, iv.xmin, iv.xmax});
  }
  return runs;
}

}  // namespace dysev
