#pragma once

// Canonical-vs-decoded phoneme alignment and the correctness percentages
// derived from it (PCC consonants, PCV vowels, PCT all phones).

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/textgrid.hpp"

namespace dysev {

enum class EditOp { Match, Substitute, Delete, Insert };

struct AlignStep {
  EditOp op;
  int canonical_index;  // -1 for insertions
  int decoded_index;    // -1 for deletions
};

// Minimum-edit-distance alignment under unit costs. When several operations
// give the same distance the backtrace prefers match, then substitution,
// then deletion, then insertion.
inline std::vector<AlignStep> align_phonemes(
    const std::vector<std::string>& canonical,
    const std::vector<std::string>& decoded) {
  const std::size_t n = canonical.size(), m = decoded.size();
  std::vector<std::vector<int>> d(n + 1, std::vector<int>(m + 1, 0));
  for (std::size_t i = 0; i <= n; ++i) d[i][0] = static_cast<int>(i);
  for (std::size_t j = 0; j <= m; ++j) d[0][j] = static_cast<int>(j);
  for (std::size_t i = 1; i <= n; ++i) {
    for (std::size_t j = 1; j <= m; ++j) {
      int diag = d[i - 1][j - 1] + (canonical[i - 1] == decoded[j - 1] ? 0 : 1);
      int del = d[i - 1][j] + 1;
      int ins = d[i][j - 1] + 1;
      d[i][j] = std::min({diag, del, ins});
    }
  }

  std::vector<AlignStep> steps;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 && canonical[i - 1] == decoded[j - 1] &&
        d[i][j] == d[i - 1][j - 1]) {
      steps.push_back({EditOp::Match, static_cast<int>(i) - 1,
                       static_cast<int>(j) - 1});
      --i, --j;
    } else if (i > 0 && j > 0 && d[i][j] == d[i - 1][j - 1] + 1) {
      steps.push_back({EditOp::Substitute, static_cast<int>(i) - 1,
                       static_cast<int>(j) - 1});
      --i, --j;
    } else if (i > 0 && d[i][j] == d[i - 1][j] + 1) {
      steps.push_back({EditOp::Delete, static_cast<int>(i) - 1, -1});
      --i;
    } else {
      steps.push_back({EditOp::Insert, -1, static_cast<int>(j) - 1});
      --j;
    }
  }
  std::reverse(steps.begin(), steps.end());
  return steps;
}

struct PhonemeCorrectness {
  std::optional<double> pcc, pcv, pct;  // percentages; unset when denominator 0
  int consonants_total = 0, consonants_correct = 0;
  int vowels_total = 0, vowels_correct = 0;
  int phones_total = 0, phones_correct = 0;
};

// A canonical phone counts as correct when the alignment pairs it with an
// identical decoded phone. Silence-class labels are stripped from both
// sequences before aligning.
inline PhonemeCorrectness phoneme_correctness(
    const std::vector<std::string>& canonical,
    const std::vector<std::string>& decoded, const PhoneClassMap& map) {
  auto keep_phones = [&](const std::vector<std::string>& seq) {
    std::vector<std::string> out;
    for (const std::string& label : seq)
      if (map.classify(label) != PhoneClass::Silence) out.push_back(label);
    return out;
  };
  const std::vector<std::string> can = keep_phones(canonical);
  const std::vector<std::string> dec = keep_phones(decoded);

  PhonemeCorrectness res;
  std::vector<bool> correct(can.size(), false);
  for (const AlignStep& s : align_phonemes(can, dec))
    if (s.op == EditOp::Match) correct[s.canonical_index] = true;

  for (std::size_t k = 0; k < can.size(); ++k) {
    ++res.phones_total;
    if (correct[k]) ++res.phones_correct;
    if (map.classify(can[k]) == PhoneClass::Consonant) {
      ++res.consonants_total;
      if (correct[k]) ++res.consonants_correct;
    } else {
      ++res.vowels_total;
      if (correct[k]) ++res.vowels_correct;
    }
  }

  auto pct = [](int correct_n, int total) -> std::optional<double> {
    if (total == 0) return std::nullopt;
    return 100.0 * correct_n / total;
  };
  res.pcc = pct(res.consonants_correct, res.consonants_total);
  res.pcv = pct(res.vowels_correct, res.vowels_total);
  res.pct = pct(res.phones_correct, res.phones_total);
  return res;
}

}  // namespace dysev
