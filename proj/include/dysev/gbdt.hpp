#pragma once

// Sparsity-aware gradient-boosted trees with softmax multiclass training,
// learned default directions for missing values, and gain importance.
//
// Split search is exact greedy. Candidate thresholds are the midpoints of
// consecutive distinct present values, plus (when the node has both present
// and missing rows) the two extreme thresholds -DBL_MAX / +DBL_MAX that
// separate missing rows from all present rows. Each candidate is evaluated
// with missing routed left and routed right; a candidate is valid when both
// children receive at least one row and at least min_child_weight hessian
// mass. Ties are broken by feature index, then missing-left, then the
// smaller threshold.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dysev/common.hpp"

namespace dysev {

struct TrainMatrix {
  std::vector<std::string> column_names;
  std::vector<double> values;          // row-major n × d
  std::vector<std::uint8_t> present;   // row-major mask
  std::vector<int> labels;
  std::vector<std::string> groups;     // speaker id per row

  std::size_t n_rows() const { return labels.size(); }
  std::size_t n_cols() const { return column_names.size(); }
  double value(std::size_t i, std::size_t j) const {
    return values[i * n_cols() + j];
  }
  bool is_present(std::size_t i, std::size_t j) const {
    return present[i * n_cols() + j] != 0;
  }
  void set(std::size_t i, std::size_t j, double v) {
    values[i * n_cols() + j] = v;
    present[i * n_cols() + j] = 1;
  }
  void set_missing(std::size_t i, std::size_t j) {
    values[i * n_cols() + j] = 0.0;
    present[i * n_cols() + j] = 0;
  }
  void resize(std::size_t n, std::size_t d) {
    values.assign(n * d, 0.0);
    present.assign(n * d, 0);
    labels.assign(n, 0);
    groups.assign(n, "");
  }

  void validate() const {
    const std::size_t n = n_rows(), d = n_cols();
    if (values.size() != n * d || present.size() != n * d ||
        groups.size() != n)
      throw config_error("train matrix fields are not congruent");
    for (std::size_t i = 0; i < n; ++i) {
      bool any = false;
      for (std::size_t j = 0; j < d; ++j) any = any || is_present(i, j);
      if (!any)
        throw config_error("row " + std::to_string(i) +
                           " has no present cell");
      if (labels[i] < 0)
        throw config_error("row " + std::to_string(i) + " has negative label");
    }
  }
};

struct TrainConfig {
  int rounds = 100;
  int max_depth = 3;
  double learning_rate = 0.3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;

  bool operator==(const TrainConfig&) const = default;
};

// Gradient/hessian bookkeeping of an accepted split, kept for the gain
// replay and default-direction audits.
struct SplitStats {
  double g_left = 0.0, h_left = 0.0;      // present rows routed left
  double g_right = 0.0, h_right = 0.0;    // present rows routed right
  double g_missing = 0.0, h_missing = 0.0;
  int n_left = 0, n_right = 0, n_missing = 0;
  double gain = 0.0;

  bool operator==(const SplitStats&) const = default;
};

struct TreeNode {
  bool is_leaf = true;
  double weight = 0.0;  // leaf value, learning rate already applied
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  int left = -1, right = -1;
  SplitStats stats;

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  double value(std::span<const double> row,
               std::span<const std::uint8_t> mask) const {
    int at = 0;
    while (!nodes[at].is_leaf) {
      const TreeNode& nd = nodes[at];
      bool go_left = mask[nd.feature] ? row[nd.feature] < nd.threshold
                                      : nd.default_left;
      at = go_left ? nd.left : nd.right;
    }
    return nodes[at].weight;
  }

  bool operator==(const Tree&) const = default;
};

struct Ensemble {
  int n_classes = 0;
  int n_columns = 0;
  std::vector<std::string> column_names;
  std::vector<double> base_score;  // per class
  std::vector<Tree> trees;         // grouped in rounds; tree t is class t % n_classes
  TrainConfig config;

  Ensemble() = default;
  Ensemble(int classes, int columns)
      : n_classes(classes),
        n_columns(columns),
        base_score(classes, 0.0) {}

  int rounds() const {
    return n_classes > 0 ? static_cast<int>(trees.size()) / n_classes : 0;
  }

  std::vector<double> predict_scores(std::span<const double> row,
                                     std::span<const std::uint8_t> mask) const {
    if (static_cast<int>(row.size()) != n_columns ||
        static_cast<int>(mask.size()) != n_columns)
      throw config_error("prediction row width " + std::to_string(row.size()) +
                         " does not match the " + std::to_string(n_columns) +
                         " training columns");
    std::vector<double> s(base_score);
    for (std::size_t t = 0; t < trees.size(); ++t)
      s[t % n_classes] += trees[t].value(row, mask);
    return s;
  }

  std::vector<double> predict_proba(std::span<const double> row,
                                    std::span<const std::uint8_t> mask) const {
    if (n_classes < 2) throw config_error("ensemble has fewer than 2 classes");
    std::vector<double> s = predict_scores(row, mask);
    double hi = *std::max_element(s.begin(), s.end());
    double z = 0.0;
    for (double& v : s) {
      v = std::exp(v - hi);
      z += v;
    }
    for (double& v : s) v /= z;
    return s;
  }

  int predict_class(std::span<const double> row,
                    std::span<const std::uint8_t> mask) const {
    std::vector<double> p = predict_proba(row, mask);
    return static_cast<int>(
        std::max_element(p.begin(), p.end()) - p.begin());
  }

  bool operator==(const Ensemble&) const = default;
};

struct SplitCandidate {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
  SplitStats stats;
};

namespace gbdt_detail {

inline double split_gain(double gl, double hl, double gr, double hr, double g,
                         double h, double lambda) {
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                g * g / (h + lambda));
}

// Pinned preference order between candidates of equal gain.
inline bool better(const SplitCandidate& a, const SplitCandidate& b) {
  if (!b.valid) return a.valid;
  if (!a.valid) return false;
  if (a.gain != b.gain) return a.gain > b.gain;
  if (a.feature != b.feature) return a.feature < b.feature;
  if (a.default_left != b.default_left) return a.default_left;
  return a.threshold < b.threshold;
}

}  // namespace gbdt_detail

// Exact greedy search over one feature. g/h are per-row gradients and
// hessians for the rows listed in `rows`.
inline SplitCandidate find_split(const TrainMatrix& m,
                                 std::span<const int> rows,
                                 std::span<const double> g,
                                 std::span<const double> h, int feature,
                                 const TrainConfig& cfg) {
  struct Entry {
    double value, g, h;
  };
  std::vector<Entry> sorted;
  double g_missing = 0.0, h_missing = 0.0;
  int n_missing = 0;
  double g_total = 0.0, h_total = 0.0;
  for (int r : rows) {
    g_total += g[r];
    h_total += h[r];
    if (m.is_present(r, feature)) {
      sorted.push_back({m.value(r, feature), g[r], h[r]});
    } else {
      g_missing += g[r];
      h_missing += h[r];
      ++n_missing;
    }
  }
  std::sort(sorted.begin(), sorted.end(),
            [](const Entry& a, const Entry& b) { return a.value < b.value; });

  std::vector<double> thresholds;
  for (std::size_t i = 0; i + 1 < sorted.size(); ++i) {
    if (sorted[i].value == sorted[i + 1].value) continue;
    double t = sorted[i].value + (sorted[i + 1].value - sorted[i].value) / 2.0;
    if (t > sorted[i].value) thresholds.push_back(t);
  }
  if (n_missing > 0 && !sorted.empty()) {
    thresholds.push_back(-std::numeric_limits<double>::max());
    thresholds.push_back(std::numeric_limits<double>::max());
  }

  SplitCandidate best;
  for (double t : thresholds) {
    double gl = 0.0, hl = 0.0;
    int nl = 0;
    for (const Entry& e : sorted) {
      if (!(e.value < t)) break;
      gl += e.g;
      hl += e.h;
      ++nl;
    }
    double gr = 0.0, hr = 0.0;
    int nr = static_cast<int>(sorted.size()) - nl;
    for (std::size_t i = nl; i < sorted.size(); ++i) {
      gr += sorted[i].g;
      hr += sorted[i].h;
    }
    for (bool missing_left : {true, false}) {
      double gl_eff = gl + (missing_left ? g_missing : 0.0);
      double hl_eff = hl + (missing_left ? h_missing : 0.0);
      double gr_eff = gr + (missing_left ? 0.0 : g_missing);
      double hr_eff = hr + (missing_left ? 0.0 : h_missing);
      int nl_eff = nl + (missing_left ? n_missing : 0);
      int nr_eff = nr + (missing_left ? 0 : n_missing);
      if (nl_eff == 0 || nr_eff == 0) continue;
      if (hl_eff < cfg.min_child_weight || hr_eff < cfg.min_child_weight)
        continue;
      SplitCandidate c;
      c.valid = true;
      c.gain = gbdt_detail::split_gain(gl_eff, hl_eff, gr_eff, hr_eff,
                                       g_total, h_total, cfg.lambda);
      c.feature = feature;
      c.threshold = t;
      c.default_left = missing_left;
      c.stats = {gl, hl, gr, hr, g_missing, h_missing,
                 nl, nr, n_missing, c.gain};
      if (gbdt_detail::better(c, best)) best = c;
    }
  }
  return best;
}

inline SplitCandidate find_best_split(const TrainMatrix& m,
                                      std::span<const int> rows,
                                      std::span<const double> g,
                                      std::span<const double> h,
                                      const TrainConfig& cfg) {
  SplitCandidate best;
  for (int j = 0; j < static_cast<int>(m.n_cols()); ++j) {
    SplitCandidate c = find_split(m, rows, g, h, j, cfg);
    if (gbdt_detail::better(c, best)) best = c;
  }
  return best;
}

namespace gbdt_detail {

inline int grow_node(Tree& tree, const TrainMatrix& m, std::vector<int> rows,
                     std::span<const double> g, std::span<const double> h,
                     int depth, const TrainConfig& cfg) {
  double g_sum = 0.0, h_sum = 0.0;
  for (int r : rows) {
    g_sum += g[r];
    h_sum += h[r];
  }
  const int at = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();

  SplitCandidate best;
  if (depth < cfg.max_depth)
    best = find_best_split(m, rows, g, h, cfg);
  if (!best.valid || !(best.gain > cfg.gamma)) {
    tree.nodes[at].is_leaf = true;
    tree.nodes[at].weight =
        -g_sum / (h_sum + cfg.lambda) * cfg.learning_rate;
    return at;
  }

  std::vector<int> left_rows, right_rows;
  for (int r : rows) {
    bool go_left = m.is_present(r, best.feature)
                       ? m.value(r, best.feature) < best.threshold
                       : best.default_left;
    (go_left ? left_rows : right_rows).push_back(r);
  }
  rows.clear();
  rows.shrink_to_fit();

  int left = grow_node(tree, m, std::move(left_rows), g, h, depth + 1, cfg);
  int right = grow_node(tree, m, std::move(right_rows), g, h, depth + 1, cfg);
  TreeNode& nd = tree.nodes[at];
  nd.is_leaf = false;
  nd.weight = 0.0;
  nd.feature = best.feature;
  nd.threshold = best.threshold;
  nd.default_left = best.default_left;
  nd.left = left;
  nd.right = right;
  nd.stats = best.stats;
  return at;
}

}  // namespace gbdt_detail

// Softmax multiclass boosting: one tree per class per round, probabilities
// refreshed once per round. base_score is the log class prior (classes that
// never occur get log(1e-12)).
inline Ensemble train(const TrainMatrix& m, const TrainConfig& cfg) {
  m.validate();
  const std::size_t n = m.n_rows();
  if (n < 2) throw config_error("training needs at least 2 rows");
  if (cfg.rounds < 1 || cfg.max_depth < 1)
    throw config_error("rounds and max_depth must be at least 1");
  int n_classes = 0;
  for (int y : m.labels) n_classes = std::max(n_classes, y + 1);
  std::vector<int> counts(n_classes, 0);
  for (int y : m.labels) ++counts[y];
  int present_classes = 0;
  for (int c : counts) present_classes += c > 0 ? 1 : 0;
  if (present_classes < 2)
    throw config_error("training labels contain a single class");

  Ensemble e(n_classes, static_cast<int>(m.n_cols()));
  e.column_names = m.column_names;
  e.config = cfg;
  for (int k = 0; k < n_classes; ++k)
    e.base_score[k] =
        counts[k] > 0 ? std::log(static_cast<double>(counts[k]) / n)
                      : std::log(1e-12);

  std::vector<std::vector<double>> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = e.base_score;

  std::vector<int> all_rows(n);
  for (std::size_t i = 0; i < n; ++i) all_rows[i] = static_cast<int>(i);
  std::vector<double> g(n), h(n);
  std::vector<std::vector<double>> proba(n, std::vector<double>(n_classes));

  for (int round = 0; round < cfg.rounds; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      double hi = *std::max_element(scores[i].begin(), scores[i].end());
      double z = 0.0;
      for (int k = 0; k < n_classes; ++k) {
        proba[i][k] = std::exp(scores[i][k] - hi);
        z += proba[i][k];
      }
      for (int k = 0; k < n_classes; ++k) proba[i][k] /= z;
    }
    for (int k = 0; k < n_classes; ++k) {
      for (std::size_t i = 0; i < n; ++i) {
        double p = proba[i][k];
        g[i] = p - (m.labels[i] == k ? 1.0 : 0.0);
        h[i] = p * (1.0 - p);
      }
      Tree tree;
      gbdt_detail::grow_node(tree, m, all_rows, g, h, 0, cfg);
      for (std::size_t i = 0; i < n; ++i) {
        const double* row = &m.values[i * m.n_cols()];
        const std::uint8_t* mask = &m.present[i * m.n_cols()];
        scores[i][k] += tree.value({row, m.n_cols()}, {mask, m.n_cols()});
      }
      e.trees.push_back(std::move(tree));
    }
  }
  return e;
}

// Total split gain per column; columns never split on score 0.
inline std::map<std::string, double> gain_importance(const Ensemble& e) {
  std::map<std::string, double> imp;
  for (const std::string& name : e.column_names) imp[name] = 0.0;
  for (const Tree& tree : e.trees)
    for (const TreeNode& nd : tree.nodes)
      if (!nd.is_leaf) imp[e.column_names[nd.feature]] += nd.stats.gain;
  return imp;
}

// Re-checks every split from its stored gradient sums: the recorded gain must
// replay within tol and the recorded default direction must be at least as
// good as routing missing the other way (ties resolve left). Returns a
// description of the first violation, or nullopt when the ensemble is clean.
inline std::optional<std::string> audit_default_directions(
    const Ensemble& e, double tol = 1e-9) {
  const double lambda = e.config.lambda;
  const double mcw = e.config.min_child_weight;
  for (std::size_t t = 0; t < e.trees.size(); ++t) {
    const Tree& tree = e.trees[t];
    for (std::size_t n = 0; n < tree.nodes.size(); ++n) {
      const TreeNode& nd = tree.nodes[n];
      if (nd.is_leaf) continue;
      const SplitStats& s = nd.stats;
      const double g = s.g_left + s.g_right + s.g_missing;
      const double h = s.h_left + s.h_right + s.h_missing;
      auto routing_gain = [&](bool left) -> std::optional<double> {
        double gl = s.g_left + (left ? s.g_missing : 0.0);
        double hl = s.h_left + (left ? s.h_missing : 0.0);
        double gr = s.g_right + (left ? 0.0 : s.g_missing);
        double hr = s.h_right + (left ? 0.0 : s.h_missing);
        int nl = s.n_left + (left ? s.n_missing : 0);
        int nr = s.n_right + (left ? 0 : s.n_missing);
        if (nl == 0 || nr == 0 || hl < mcw || hr < mcw) return std::nullopt;
        return gbdt_detail::split_gain(gl, hl, gr, hr, g, h, lambda);
      };
      auto where = [&] {
        return "tree " + std::to_string(t) + " node " + std::to_string(n);
      };
      auto recorded = routing_gain(nd.default_left);
      if (!recorded) return where() + ": recorded routing is invalid";
      if (std::fabs(*recorded - s.gain) > tol)
        return where() + ": stored gain does not replay";
      auto other = routing_gain(!nd.default_left);
      if (other) {
        if (*other > *recorded + tol)
          return where() + ": opposite default direction has higher gain";
        if (!nd.default_left && std::fabs(*other - *recorded) <= tol)
          return where() + ": tie should have resolved to the left";
      }
    }
  }
  return std::nullopt;
}

// Smallest round count achieving the best evaluation score.
template <class Eval>
TrainConfig grid_search(const TrainMatrix& m,
                        std::span<const int> rounds_grid,
                        const TrainConfig& base, Eval&& eval) {
  if (rounds_grid.empty()) throw config_error("empty rounds grid");
  TrainConfig best = base;
  double best_score = -std::numeric_limits<double>::infinity();
  bool first = true;
  for (int rounds : rounds_grid) {
    TrainConfig cfg = base;
    cfg.rounds = rounds;
    double score = eval(m, cfg);
    if (first || score > best_score) {
      best = cfg;
      best_score = score;
      first = false;
    }
  }
  return best;
}

}  // namespace dysev
