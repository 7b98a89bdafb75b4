#pragma once

// Recursive feature elimination on gain importance: evaluate the current
// set under LOSO, train on the full table, drop the least-important
// feature, repeat down to a single feature. MFCC statistics never enter
// the candidate set.

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/cv.hpp"
#include "dysev/gbdt.hpp"
#include "dysev/table.hpp"

namespace dysev {

struct SelectionStep {
  std::vector<std::string> feature_set;  // canonical order
  std::string dropped;                   // empty on the final step
  double accuracy = 0.0;                 // LOSO accuracy percent
};

struct SelectionCurve {
  std::vector<SelectionStep> steps;
  std::vector<std::string> optimal_set;
};

inline SelectionCurve select_features(const FeatureTable& t,
                                      const TrainConfig& cfg) {
  for (int j = 0; j < kFeatureCount; ++j) {
    bool any = false;
    for (const UtteranceRow& r : t.rows)
      any = any || r.features.values[j].has_value();
    if (!any)
      throw config_error("feature '" + feature_names()[j] +
                         "' was never extracted for language '" + t.language +
                         "'; selection needs every column");
  }

  std::set<std::string> current(feature_names().begin(),
                                feature_names().end());
  SelectionCurve curve;
  while (!current.empty()) {
    SelectionStep step;
    step.feature_set = canonical_order(current);
    TrainMatrix m = to_matrix(t, step.feature_set);
    step.accuracy = evaluate_loso(m, cfg).accuracy;

    if (current.size() > 1) {
      Ensemble model = train(m, cfg);
      auto importance = gain_importance(model);
      // Smallest importance loses; among ties the alphabetically last name.
      std::string drop;
      double lowest = 0.0;
      for (const std::string& f : step.feature_set) {
        double imp = importance.at(f);
        if (drop.empty() || imp < lowest || (imp == lowest && f > drop)) {
          drop = f;
          lowest = imp;
        }
      }
      step.dropped = drop;
      current.erase(drop);
    } else {
      current.clear();
    }
    curve.steps.push_back(std::move(step));
  }

  // Highest accuracy wins; equal accuracy prefers the smaller set, which is
  // always the later step.
  const SelectionStep* best = nullptr;
  for (const SelectionStep& step : curve.steps)
    if (!best || step.accuracy >= best->accuracy) best = &step;
  curve.optimal_set = best->feature_set;
  return curve;
}

}  // namespace dysev
