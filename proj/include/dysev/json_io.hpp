#pragma once

// JSON forms of the trained ensemble, selection curve, cross table, and CV
// report. nlohmann::json keeps object keys sorted, so dumps are
// deterministic byte-for-byte for equal inputs.

#include <string>
#include <vector>

#include <json.hpp>

#include "dysev/common.hpp"
#include "dysev/cv.hpp"
#include "dysev/gbdt.hpp"
#include "dysev/selection.hpp"
#include "dysev/table.hpp"

namespace dysev {

inline nlohmann::json train_config_to_json(const TrainConfig& cfg) {
  return {{"rounds", cfg.rounds},
          {"max_depth", cfg.max_depth},
          {"learning_rate", cfg.learning_rate},
          {"lambda", cfg.lambda},
          {"gamma", cfg.gamma},
          {"min_child_weight", cfg.min_child_weight},
          {"seed", cfg.seed}};
}

inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  TrainConfig cfg;
  cfg.rounds = j.at("rounds").get<int>();
  cfg.max_depth = j.at("max_depth").get<int>();
  cfg.learning_rate = j.at("learning_rate").get<double>();
  cfg.lambda = j.at("lambda").get<double>();
  cfg.gamma = j.at("gamma").get<double>();
  cfg.min_child_weight = j.at("min_child_weight").get<double>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  return cfg;
}

inline nlohmann::json ensemble_to_json(const Ensemble& e) {
  nlohmann::json trees = nlohmann::json::array();
  for (const Tree& tree : e.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& nd : tree.nodes) {
      if (nd.is_leaf) {
        nodes.push_back({{"weight", nd.weight}});
      } else {
        nodes.push_back(
            {{"feature", nd.feature},
             {"threshold", nd.threshold},
             {"default", nd.default_left ? "left" : "right"},
             {"left", nd.left},
             {"right", nd.right},
             {"stats",
              {{"g_left", nd.stats.g_left},
               {"h_left", nd.stats.h_left},
               {"g_right", nd.stats.g_right},
               {"h_right", nd.stats.h_right},
               {"g_missing", nd.stats.g_missing},
               {"h_missing", nd.stats.h_missing},
               {"n_left", nd.stats.n_left},
               {"n_right", nd.stats.n_right},
               {"n_missing", nd.stats.n_missing},
               {"gain", nd.stats.gain}}}});
      }
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  return {{"n_classes", e.n_classes},
          {"columns", e.column_names},
          {"base_score", e.base_score},
          {"config", train_config_to_json(e.config)},
          {"trees", std::move(trees)}};
}

inline Ensemble ensemble_from_json(const nlohmann::json& j) {
  Ensemble e;
  e.n_classes = j.at("n_classes").get<int>();
  e.column_names = j.at("columns").get<std::vector<std::string>>();
  e.n_columns = static_cast<int>(e.column_names.size());
  e.base_score = j.at("base_score").get<std::vector<double>>();
  e.config = train_config_from_json(j.at("config"));
  if (static_cast<int>(e.base_score.size()) != e.n_classes)
    throw config_error("model base_score width does not match n_classes");
  for (const nlohmann::json& tj : j.at("trees")) {
    Tree tree;
    for (const nlohmann::json& nj : tj.at("nodes")) {
      TreeNode nd;
      if (nj.contains("feature")) {
        nd.is_leaf = false;
        nd.feature = nj.at("feature").get<int>();
        nd.threshold = nj.at("threshold").get<double>();
        std::string def = nj.at("default").get<std::string>();
        if (def != "left" && def != "right")
          throw config_error("model node default must be left or right");
        nd.default_left = def == "left";
        nd.left = nj.at("left").get<int>();
        nd.right = nj.at("right").get<int>();
        const nlohmann::json& sj = nj.at("stats");
        nd.stats.g_left = sj.at("g_left").get<double>();
        nd.stats.h_left = sj.at("h_left").get<double>();
        nd.stats.g_right = sj.at("g_right").get<double>();
        nd.stats.h_right = sj.at("h_right").get<double>();
        nd.stats.g_missing = sj.at("g_missing").get<double>();
        nd.stats.h_missing = sj.at("h_missing").get<double>();
        nd.stats.n_left = sj.at("n_left").get<int>();
        nd.stats.n_right = sj.at("n_right").get<int>();
        nd.stats.n_missing = sj.at("n_missing").get<int>();
        nd.stats.gain = sj.at("gain").get<double>();
        if (nd.feature < 0 || nd.feature >= e.n_columns)
          throw config_error("model node feature index out of range");
      } else {
        nd.is_leaf = true;
        nd.weight = nj.at("weight").get<double>();
      }
      tree.nodes.push_back(nd);
    }
    for (const TreeNode& nd : tree.nodes) {
      if (nd.is_leaf) continue;
      const int n = static_cast<int>(tree.nodes.size());
      if (nd.left < 0 || nd.left >= n || nd.right < 0 || nd.right >= n)
        throw config_error("model node child index out of range");
    }
    e.trees.push_back(std::move(tree));
  }
  if (e.n_classes > 0 &&
      e.trees.size() % static_cast<std::size_t>(e.n_classes) != 0)
    throw config_error("model tree count is not a whole number of rounds");
  return e;
}

inline nlohmann::json selection_curve_to_json(const SelectionCurve& c) {
  nlohmann::json steps = nlohmann::json::array();
  for (const SelectionStep& s : c.steps)
    steps.push_back({{"features", s.feature_set},
                     {"dropped", s.dropped},
                     {"accuracy", s.accuracy}});
  return {{"steps", std::move(steps)}, {"optimal_set", c.optimal_set}};
}

inline SelectionCurve selection_curve_from_json(const nlohmann::json& j) {
  SelectionCurve c;
  for (const nlohmann::json& sj : j.at("steps")) {
    SelectionStep s;
    s.feature_set = sj.at("features").get<std::vector<std::string>>();
    s.dropped = sj.at("dropped").get<std::string>();
    s.accuracy = sj.at("accuracy").get<double>();
    c.steps.push_back(std::move(s));
  }
  c.optimal_set = j.at("optimal_set").get<std::vector<std::string>>();
  return c;
}

// Cells are numbers where present and null where masked or missing.
inline nlohmann::json cross_table_to_json(const CrossTable& ct) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < ct.n_rows(); ++r) {
    nlohmann::json cells = nlohmann::json::object();
    for (std::size_t j = 0; j < ct.n_cols(); ++j) {
      if (ct.is_present(r, j))
        cells[ct.columns[j]] = ct.value(r, j);
      else
        cells[ct.columns[j]] = nullptr;
    }
    rows.push_back({{"language", ct.rows[r].language},
                    {"utterance_id", ct.rows[r].utterance_id},
                    {"speaker_id", ct.rows[r].speaker_id},
                    {"severity", to_string(ct.rows[r].severity)},
                    {"cells", std::move(cells)}});
  }
  return {{"strategy", to_string(ct.strategy)},
          {"columns", ct.columns},
          {"rows", std::move(rows)}};
}

inline CrossTable cross_table_from_json(const nlohmann::json& j) {
  CrossTable ct;
  ct.strategy = strategy_from_string(j.at("strategy").get<std::string>());
  ct.columns = j.at("columns").get<std::vector<std::string>>();
  for (const nlohmann::json& rj : j.at("rows")) {
    CrossRow row;
    row.language = rj.at("language").get<std::string>();
    row.utterance_id = rj.at("utterance_id").get<std::string>();
    row.speaker_id = rj.at("speaker_id").get<std::string>();
    row.severity = severity_from_string(rj.at("severity").get<std::string>());
    ct.rows.push_back(std::move(row));
    const nlohmann::json& cells = rj.at("cells");
    for (const std::string& col : ct.columns) {
      const nlohmann::json& cell = cells.at(col);
      if (cell.is_null()) {
        ct.values.push_back(0.0);
        ct.present.push_back(0);
      } else {
        ct.values.push_back(cell.get<double>());
        ct.present.push_back(1);
      }
    }
  }
  return ct;
}

inline nlohmann::json cv_report_to_json(const CVReport& r) {
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& row : r.confusion) confusion.push_back(row);
  nlohmann::json predictions = nlohmann::json::array();
  for (const CVReport::Prediction& p : r.predictions)
    predictions.push_back({{"row", p.row},
                           {"group", p.group},
                           {"truth", p.truth},
                           {"predicted", p.predicted}});
  nlohmann::json out = {{"folds", r.fold_order},
                        {"predictions", std::move(predictions)},
                        {"confusion", std::move(confusion)},
                        {"per_class_f1", r.per_class_f1},
                        {"macro_f1", r.macro_f1},
                        {"accuracy", r.accuracy}};
  if (r.average_language_macro_f1) {
    out["per_language_macro_f1"] = r.per_language_macro_f1;
    out["average_language_macro_f1"] = *r.average_language_macro_f1;
  }
  return out;
}

}  // namespace dysev
