#pragma once

// Leave-one-speaker-out cross-validation and its report: pooled confusion
// matrix, per-class and macro F1, accuracy, and per-language breakdowns for
// cross-lingual tables. Fold integrity (speakers never shared between train
// and test) is re-verified on every evaluation.

#include <array>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/gbdt.hpp"
#include "dysev/table.hpp"

namespace dysev {

inline constexpr int kSeverityClasses = 3;

struct Fold {
  std::string held_out;  // group key of the test speaker
  std::vector<int> train_rows, test_rows;
};

// One fold per distinct group, ordered by group key.
inline std::vector<Fold> loso_folds(std::span<const std::string> groups) {
  std::set<std::string> distinct(groups.begin(), groups.end());
  if (distinct.size() < 2)
    throw config_error("leave-one-speaker-out needs at least 2 speakers");
  std::vector<Fold> folds;
  for (const std::string& key : distinct) folds.push_back({key, {}, {}});
  for (int r = 0; r < static_cast<int>(groups.size()); ++r) {
    for (Fold& f : folds)
      (groups[r] == f.held_out ? f.test_rows : f.train_rows).push_back(r);
  }
  return folds;
}

inline std::vector<Fold> loso_folds(const TrainMatrix& m) {
  return loso_folds(m.groups);
}

// Throws when folds leak a speaker between train and test or fail to
// partition the rows.
inline void verify_folds(std::span<const std::string> groups,
                         const std::vector<Fold>& folds) {
  std::vector<int> seen(groups.size(), 0);
  for (const Fold& f : folds) {
    std::set<std::string> train_groups;
    for (int r : f.train_rows) train_groups.insert(groups[r]);
    for (int r : f.test_rows) {
      if (groups[r] != f.held_out)
        throw config_error("fold " + f.held_out +
                           " tests a row of another speaker");
      if (train_groups.count(groups[r]))
        throw config_error("fold " + f.held_out + " leaks its test speaker");
      ++seen[r];
    }
    if (f.test_rows.empty())
      throw config_error("fold " + f.held_out + " has no test rows");
    if (f.train_rows.size() + f.test_rows.size() != groups.size())
      throw config_error("fold " + f.held_out + " does not cover all rows");
  }
  for (std::size_t r = 0; r < seen.size(); ++r)
    if (seen[r] != 1)
      throw config_error("row " + std::to_string(r) + " tested " +
                         std::to_string(seen[r]) + " times across folds");
}

inline TrainMatrix matrix_subset(const TrainMatrix& m,
                                 std::span<const int> rows) {
  TrainMatrix out;
  out.column_names = m.column_names;
  out.resize(rows.size(), m.n_cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const int r = rows[i];
    out.labels[i] = m.labels[r];
    out.groups[i] = m.groups[r];
    for (std::size_t j = 0; j < m.n_cols(); ++j) {
      if (m.is_present(r, j))
        out.set(i, j, m.value(r, j));
      else
        out.set_missing(i, j);
    }
  }
  return out;
}

using Confusion = std::array<std::array<int, kSeverityClasses>,
                             kSeverityClasses>;  // [truth][predicted]

// Macro F1 in percent. A class with neither support nor predictions is left
// out of the average; a class with one of the two but no true positives
// contributes 0.
inline double macro_f1_percent(const Confusion& c) {
  double sum = 0.0;
  int counted = 0;
  for (int k = 0; k < kSeverityClasses; ++k) {
    int tp = c[k][k], support = 0, predicted = 0;
    for (int j = 0; j < kSeverityClasses; ++j) {
      support += c[k][j];
      predicted += c[j][k];
    }
    if (support == 0 && predicted == 0) continue;
    ++counted;
    if (tp > 0)
      sum += 200.0 * tp / (support + predicted);  // 2PR/(P+R) simplified
  }
  if (counted == 0) throw config_error("empty confusion matrix");
  return sum / counted;
}

inline std::array<double, kSeverityClasses> per_class_f1_percent(
    const Confusion& c) {
  std::array<double, kSeverityClasses> f1{};
  for (int k = 0; k < kSeverityClasses; ++k) {
    int tp = c[k][k], support = 0, predicted = 0;
    for (int j = 0; j < kSeverityClasses; ++j) {
      support += c[k][j];
      predicted += c[j][k];
    }
    f1[k] = tp > 0 ? 200.0 * tp / (support + predicted) : 0.0;
  }
  return f1;
}

struct CVReport {
  struct Prediction {
    int row;
    std::string group;
    int truth, predicted;
  };
  std::vector<std::string> fold_order;       // held-out group per fold
  std::vector<Prediction> predictions;       // pooled, ordered by fold
  Confusion confusion{};
  std::array<double, kSeverityClasses> per_class_f1{};
  double macro_f1 = 0.0;
  double accuracy = 0.0;  // percent
  std::map<std::string, double> per_language_macro_f1;
  std::optional<double> average_language_macro_f1;
};

// Trains one model per fold and pools the held-out predictions. When
// `row_languages` is given (cross-lingual tables), per-language macro F1 and
// their unweighted average are filled in as well.
inline CVReport evaluate_loso(const TrainMatrix& m, const TrainConfig& cfg,
                              std::span<const std::string> row_languages = {}) {
  m.validate();
  if (!row_languages.empty() && row_languages.size() != m.n_rows())
    throw config_error("row_languages does not match the row count");
  const std::vector<Fold> folds = loso_folds(m);
  verify_folds(m.groups, folds);

  CVReport report;
  for (const Fold& f : folds) {
    report.fold_order.push_back(f.held_out);
    Ensemble model;
    try {
      model = train(matrix_subset(m, f.train_rows), cfg);
    } catch (const std::exception& e) {
      throw config_error("fold " + f.held_out + ": " + e.what());
    }
    for (int r : f.test_rows) {
      std::span<const double> row{&m.values[r * m.n_cols()], m.n_cols()};
      std::span<const std::uint8_t> mask{&m.present[r * m.n_cols()],
                                         m.n_cols()};
      int truth = m.labels[r];
      int predicted = model.predict_class(row, mask);
      report.predictions.push_back({r, m.groups[r], truth, predicted});
      if (truth < kSeverityClasses && predicted < kSeverityClasses)
        ++report.confusion[truth][predicted];
    }
  }

  int total = 0, correct = 0;
  for (int k = 0; k < kSeverityClasses; ++k)
    for (int j = 0; j < kSeverityClasses; ++j) {
      total += report.confusion[k][j];
      if (k == j) correct += report.confusion[k][j];
    }
  report.accuracy = total > 0 ? 100.0 * correct / total : 0.0;
  report.per_class_f1 = per_class_f1_percent(report.confusion);
  report.macro_f1 = macro_f1_percent(report.confusion);

  if (!row_languages.empty()) {
    std::map<std::string, Confusion> by_language;
    for (const CVReport::Prediction& p : report.predictions) {
      Confusion& c = by_language[row_languages[p.row]];
      if (p.truth < kSeverityClasses && p.predicted < kSeverityClasses)
        ++c[p.truth][p.predicted];
    }
    double sum = 0.0;
    for (const auto& [language, c] : by_language) {
      double f1 = macro_f1_percent(c);
      report.per_language_macro_f1[language] = f1;
      sum += f1;
    }
    report.average_language_macro_f1 =
        sum / static_cast<double>(by_language.size());
  }
  return report;
}

// Relative percentage increase of the cross-lingual score over the
// monolingual score.
inline double relative_increase(double mono, double cross) {
  if (!(mono > 0.0))
    throw config_error("monolingual score must be positive");
  return (cross - mono) / mono * 100.0;
}

inline std::string confusion_text(const Confusion& c) {
  static const char* kNames[kSeverityClasses] = {"mild", "moderate", "severe"};
  std::string out = "truth \\ pred      mild  moderate    severe\n";
  for (int k = 0; k < kSeverityClasses; ++k) {
    char line[80];
    std::snprintf(line, sizeof line, "%-14s %9d %9d %9d\n", kNames[k],
                  c[k][0], c[k][1], c[k][2]);
    out += line;
  }
  return out;
}

inline std::string confusion_csv(const Confusion& c) {
  static const char* kNames[kSeverityClasses] = {"mild", "moderate", "severe"};
  std::string out = "truth,mild,moderate,severe\n";
  for (int k = 0; k < kSeverityClasses; ++k) {
    out += kNames[k];
    for (int j = 0; j < kSeverityClasses; ++j)
      out += "," + std::to_string(c[k][j]);
    out += "\n";
  }
  return out;
}

}  // namespace dysev
