// Acceptance gate for the extraction / selection / evaluation stack.
//
// Twelve end-to-end checks, each printing exactly one [PASS]/[FAIL] line.
// The exit code is the number of failures. Tolerances and runtime budgets
// are pinned here on purpose: if one of these starts failing, the library
// regressed, not the test.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cfloat>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "dysev/alignment.hpp"
#include "dysev/cv.hpp"
#include "dysev/experiment.hpp"
#include "dysev/formants.hpp"
#include "dysev/gbdt.hpp"
#include "dysev/pitch.hpp"
#include "dysev/prosody.hpp"
#include "dysev/table.hpp"
#include "dysev/textgrid.hpp"
#include "dysev/voice_quality.hpp"
#include "support/synth.hpp"

using namespace dysev;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

std::vector<std::string> g_notes;

void require(bool ok, const std::string& what) {
  if (!ok) g_notes.push_back(what);
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

bool rel_close(double got, double want, double tol) {
  if (want == 0.0) return got == 0.0;
  return std::fabs(got - want) <= tol * std::fabs(want);
}

// ---- 1. anchor percentages ----------------------------------------------

// Classifier for the anchor sentence. The glide W is grouped with the
// vowels; that choice is part of the correctness definition, not a typo.
PhoneClassMap anchor_phone_map() {
  PhoneClassMap m;
  m.language = "en";
  for (const char* v : {"IY", "W", "IH", "AH", "AW", "EH", "AY", "AO", "AE"})
    m.class_of[v] = PhoneClass::Vowel;
  for (const char* c : {"HH", "L", "R", "SH", "N"})
    m.class_of[c] = PhoneClass::Consonant;
  return m;
}

void check_anchor_percentages() {
  const PhoneClassMap map = anchor_phone_map();
  const std::vector<std::string> canonical = {"HH", "IY", "W", "IH", "L",
                                              "AH", "L",  "AW", "AH", "R",
                                              "EH", "L",  "AY"};
  const std::vector<std::string> decoded = {"SH", "IY", "W", "AO", "L",
                                            "AH", "L",  "AW", "AE", "N",
                                            "L",  "IY", "AY"};

  const auto t0 = Clock::now();
  const PhonemeCorrectness pc = phoneme_correctness(canonical, decoded, map);
  const double elapsed = seconds_since(t0);

  require(pc.pcc && fmt2(*pc.pcc) == "40.00",
          "pcc printed as " + (pc.pcc ? fmt2(*pc.pcc) : "unset") +
              ", want 40.00");
  require(pc.pcv && fmt2(*pc.pcv) == "62.50",
          "pcv printed as " + (pc.pcv ? fmt2(*pc.pcv) : "unset") +
              ", want 62.50");
  require(pc.pct && fmt2(*pc.pct) == "53.85",
          "pct printed as " + (pc.pct ? fmt2(*pc.pct) : "unset") +
              ", want 53.85");
  require(pc.consonants_correct == 2 && pc.consonants_total == 5,
          "consonant tally is not 2/5");
  require(pc.vowels_correct == 5 && pc.vowels_total == 8,
          "vowel tally is not 5/8");
  require(pc.phones_correct == 7 && pc.phones_total == 13,
          "phone tally is not 7/13");
  require(elapsed < 1e-3,
          "correctness call took " + std::to_string(elapsed * 1e3) + " ms");
}

// ---- 2. closed-form features vs brute force -----------------------------

void check_formula_battery() {
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-10;
  constexpr int kTrials = 1000;
  std::mt19937_64 rng(1002);
  std::uniform_real_distribution<double> period(0.002, 0.02);
  std::uniform_real_distribution<double> amp(0.1, 1.0);
  std::uniform_real_distribution<double> f1(200.0, 900.0);
  std::uniform_real_distribution<double> f2(700.0, 2600.0);
  std::uniform_real_distribution<double> dur(0.03, 0.4);
  std::uniform_int_distribution<int> seq_len(5, 40);
  std::uniform_int_distribution<int> run_len(2, 15);
  int bad = 0;
  auto expect = [&](double got, double want, const char* label) {
    if (!rel_close(got, want, kTol)) {
      ++bad;
      if (bad <= 3)
        g_notes.push_back(std::string(label) + ": got " + std::to_string(got) +
                          ", brute force " + std::to_string(want));
    }
  };

  // mean absolute successive difference, raw and normalized
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> x(seq_len(rng));
    for (double& v : x) v = period(rng);
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += std::fabs(x[i] - x[i - 1]);
    const double masd = s / (static_cast<double>(x.size()) - 1.0);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    expect(vq::mean_abs_succ_diff(x), masd, "succ-diff periods");
    expect(jitter_rel(x), masd / mean, "jitter");
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> x(seq_len(rng));
    for (double& v : x) v = amp(rng);
    double s = 0.0;
    for (std::size_t i = 1; i < x.size(); ++i) s += std::fabs(x[i] - x[i - 1]);
    const double masd = s / (static_cast<double>(x.size()) - 1.0);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    expect(vq::mean_abs_succ_diff(x), masd, "succ-diff amplitudes");
    expect(shimmer_rel(x), masd / mean, "shimmer");
  }

  // five-point perturbation, raw and normalized
  auto five_point = [](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 2; i + 2 < x.size(); ++i)
      s += std::fabs(x[i] - (x[i - 2] + x[i - 1] + x[i] + x[i + 1] +
                             x[i + 2]) /
                                5.0);
    return s / (static_cast<double>(x.size()) - 4.0);
  };
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> x(seq_len(rng));
    for (double& v : x) v = period(rng);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    expect(vq::five_point_perturbation(x), five_point(x), "5pt periods");
    expect(ppq_rel(x), five_point(x) / mean, "ppq");
  }
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> x(seq_len(rng));
    for (double& v : x) v = amp(rng);
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    expect(vq::five_point_perturbation(x), five_point(x), "5pt amplitudes");
    expect(apq_rel(x), five_point(x) / mean, "apq");
  }

  // vowel-space geometry
  for (int trial = 0; trial < kTrials; ++trial) {
    const double i1 = f1(rng), i2 = f2(rng);
    const double e1 = f1(rng), e2 = f2(rng);  // /ae/
    const double a1 = f1(rng), a2 = f2(rng);
    const double u1 = f1(rng), u2 = f2(rng);
    const double ff = f2(rng), bf = f2(rng);
    VowelFormants vf;
    vf.at(CornerVowel::I) = FormantPair{i1, i2};
    vf.at(CornerVowel::AE) = FormantPair{e1, e2};
    vf.at(CornerVowel::A) = FormantPair{a1, a2};
    vf.at(CornerVowel::U) = FormantPair{u1, u2};
    vf.front_f2 = ff;
    vf.back_f2 = bf;

    const double tri =
        0.5 * std::fabs(i1 * (a2 - u2) + a1 * (u2 - i2) + u1 * (i2 - a2));
    const double quad =
        0.5 * std::fabs((i2 * e1 + e2 * a1 + a2 * u1 + u2 * i1) -
                        (i1 * e2 + e1 * a2 + a1 * u2 + u1 * i2));
    expect(vsa_tri(vf), tri, "triangular area");
    expect(vsa_quad(vf), quad, "quadrilateral area");
    expect(fcr(vf), (u2 + a2 + i1 + u1) / (i2 + a1), "fcr");
    expect(vai(vf), (i2 + a1) / (u2 + a2 + i1 + u1), "vai");
    expect(f2_ratio(vf), ff / bf, "f2 ratio");
  }

  // rhythm metrics over interval durations
  auto pvi_pair = [](const std::vector<double>& d) {
    double raw = 0.0, norm = 0.0;
    for (std::size_t k = 0; k + 1 < d.size(); ++k) {
      raw += std::fabs(d[k] - d[k + 1]);
      norm += std::fabs(d[k] - d[k + 1]) / ((d[k] + d[k + 1]) / 2.0);
    }
    const double m = static_cast<double>(d.size());
    return std::pair<double, double>{raw / (m - 1.0),
                                     100.0 * norm / (m - 1.0)};
  };
  auto varco = [](const std::vector<double>& d) {
    double mean = 0.0;
    for (double v : d) mean += v;
    mean /= static_cast<double>(d.size());
    double ss = 0.0;
    for (double v : d) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(d.size())) * 100.0 / mean;
  };
  for (int trial = 0; trial < kTrials; ++trial) {
    std::vector<double> dv(run_len(rng)), dc(run_len(rng));
    for (double& v : dv) v = dur(rng);
    for (double& v : dc) v = dur(rng);
    std::vector<SegmentRun> runs;
    double t = 0.0;
    for (std::size_t k = 0; k < dv.size() || k < dc.size(); ++k) {
      if (k < dv.size()) {
        runs.push_back({PhoneClass::Vowel, t, t + dv[k]});
        t += dv[k];
      }
      if (k < dc.size()) {
        runs.push_back({PhoneClass::Consonant, t, t + dc[k]});
        t += dc[k];
      }
    }
    const RhythmMetrics m = rhythm_metrics(runs);
    const auto [rv, nv] = pvi_pair(dv);
    const auto [rc, nc] = pvi_pair(dc);
    require(m.varco_v && m.varco_c && m.rpvi_v && m.rpvi_c && m.npvi_v &&
                m.npvi_c,
            "rhythm metric unexpectedly unset");
    if (m.varco_v) expect(*m.varco_v, varco(dv), "varco vocalic");
    if (m.varco_c) expect(*m.varco_c, varco(dc), "varco consonantal");
    if (m.rpvi_v) expect(*m.rpvi_v, rv, "rpvi vocalic");
    if (m.rpvi_c) expect(*m.rpvi_c, rc, "rpvi consonantal");
    if (m.npvi_v) expect(*m.npvi_v, nv, "npvi vocalic");
    if (m.npvi_c) expect(*m.npvi_c, nc, "npvi consonantal");
  }

  require(bad == 0, std::to_string(bad) + " formula mismatches beyond " +
                        std::to_string(kTol) + " relative");
  const double elapsed = seconds_since(t0);
  require(elapsed < 10.0,
          "formula battery took " + std::to_string(elapsed) + " s");
}

// ---- 3. voice break threshold boundary ----------------------------------

void check_break_threshold() {
  auto with_gap = [](double gap) {
    PulseTrain p;
    p.pulse_times = {0.10, 0.11, 0.11 + gap};
    p.periods = {0.01, gap};
    p.amplitudes = {1.0, 1.0};
    return p;
  };
  const VoiceBreaks at = voice_breaks(with_gap(0.01786), 1.0);
  require(at.count == 0, "a 0.01786 s gap was counted as a break");
  require(at.degree == 0.0, "a 0.01786 s gap contributed break time");
  const VoiceBreaks over = voice_breaks(with_gap(0.01787), 1.0);
  require(over.count == 1, "a 0.01787 s gap was not counted as a break");
  require(std::fabs(over.degree - 0.01787) < 1e-15,
          "break degree is not the gap over the total duration");
}

// ---- 4. hnr against known periodic-to-noise ratios ----------------------

void check_hnr_calibration() {
  const double sr = 16000.0;
  const double f0 = 150.0;
  const int n = 16000;
  std::mt19937_64 rng(904);
  for (double target : {10.0, 20.0, 30.0}) {
    // unit-amplitude tone carries power 1/2; scale the noise to hit the ratio
    const double sigma = std::sqrt(0.5 / std::pow(10.0, target / 10.0));
    std::normal_distribution<double> noise(0.0, sigma);
    Waveform w;
    w.sample_rate = sr;
    w.samples.resize(n);
    for (int i = 0; i < n; ++i)
      w.samples[i] =
          std::sin(2.0 * synth::kPi * f0 * i / sr) + noise(rng);
    const PitchTrack track = f0_contour(w);
    require(track.voiced_count() > 0,
            "no voiced frames at ratio " + fmt2(target));
    const double got = hnr_db(w, track);
    require(std::fabs(got - target) <= 2.0,
            "hnr " + fmt2(got) + " dB at a " + fmt2(target) + " dB ratio");
  }
}

// ---- 5. one-round stumps vs exhaustive enumeration ----------------------

struct Stump {
  bool valid = false;
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  double threshold = 0.0;
  bool default_left = true;
};

double stump_gain(double gl, double hl, double gr, double hr, double g,
                  double h, double lambda) {
  return 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) -
                g * g / (h + lambda));
}

bool stump_better(const Stump& c, const Stump& b) {
  if (c.gain != b.gain) return c.gain > b.gain;
  if (c.feature != b.feature) return c.feature < b.feature;
  if (c.default_left != b.default_left) return c.default_left;
  return c.threshold < b.threshold;
}

// Every admissible stump on the node: midpoints of consecutive distinct
// present values per feature, the two extreme cuts when the feature also
// has missing rows, and both default directions for each cut.
std::vector<Stump> enumerate_stumps(const TrainMatrix& m,
                                    const std::vector<double>& g,
                                    const std::vector<double>& h,
                                    const TrainConfig& cfg) {
  const std::size_t n = m.n_rows();
  double g_all = 0.0, h_all = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    g_all += g[i];
    h_all += h[i];
  }
  std::vector<Stump> out;
  for (int j = 0; j < static_cast<int>(m.n_cols()); ++j) {
    std::vector<double> vals;
    bool any_missing = false;
    for (std::size_t i = 0; i < n; ++i) {
      if (m.is_present(i, j))
        vals.push_back(m.value(i, j));
      else
        any_missing = true;
    }
    if (vals.empty()) continue;
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    std::vector<double> cuts;
    for (std::size_t k = 0; k + 1 < vals.size(); ++k) {
      const double t = vals[k] + (vals[k + 1] - vals[k]) / 2.0;
      if (t > vals[k]) cuts.push_back(t);
    }
    if (any_missing) {
      cuts.push_back(-DBL_MAX);
      cuts.push_back(DBL_MAX);
    }
    for (double t : cuts) {
      for (bool dl : {true, false}) {
        double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
        int nl = 0, nr = 0;
        for (std::size_t i = 0; i < n; ++i) {
          const bool left = m.is_present(i, j) ? m.value(i, j) < t : dl;
          if (left) {
            gl += g[i];
            hl += h[i];
            ++nl;
          } else {
            gr += g[i];
            hr += h[i];
            ++nr;
          }
        }
        if (nl < 1 || nr < 1 || hl < cfg.min_child_weight ||
            hr < cfg.min_child_weight)
          continue;
        out.push_back({true,
                       stump_gain(gl, hl, gr, hr, g_all, h_all, cfg.lambda),
                       j, t, dl});
      }
    }
  }
  return out;
}

void check_stump_enumeration() {
  const auto t0 = Clock::now();
  constexpr double kTol = 1e-9;
  TrainConfig cfg;
  cfg.rounds = 1;
  cfg.max_depth = 1;
  cfg.learning_rate = 0.3;
  cfg.lambda = 1.0;
  cfg.min_child_weight = 0.0;
  std::mt19937_64 rng(505);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  int checked_trees = 0;

  for (int ds = 0; ds < 200; ++ds) {
    const int n = 2 + static_cast<int>(rng() % 7);
    const int d = 1 + static_cast<int>(rng() % 3);
    const int n_classes = 2 + static_cast<int>(rng() % 2);
    TrainMatrix m;
    m.column_names.clear();
    for (int j = 0; j < d; ++j) m.column_names.push_back("f" + std::to_string(j));
    m.resize(n, d);
    for (int i = 0; i < n; ++i) {
      m.groups[i] = "s" + std::to_string(i);
      m.labels[i] = static_cast<int>(rng() % n_classes);
      bool any = false;
      for (int j = 0; j < d; ++j) {
        if (rng() % 100 < 30) {
          m.set_missing(i, j);
        } else {
          m.set(i, j, value(rng));
          any = true;
        }
      }
      if (!any) m.set(i, static_cast<int>(rng() % d), value(rng));
    }
    if (std::set<int>(m.labels.begin(), m.labels.end()).size() < 2)
      m.labels[0] = (m.labels[1] + 1) % n_classes;

    int classes = 0;
    for (int y : m.labels) classes = std::max(classes, y + 1);
    std::vector<int> counts(classes, 0);
    for (int y : m.labels) ++counts[y];
    std::vector<double> base(classes);
    for (int k = 0; k < classes; ++k)
      base[k] = counts[k] > 0
                    ? std::log(static_cast<double>(counts[k]) / n)
                    : std::log(1e-12);
    const double hi = *std::max_element(base.begin(), base.end());
    std::vector<double> p(classes);
    double z = 0.0;
    for (int k = 0; k < classes; ++k) {
      p[k] = std::exp(base[k] - hi);
      z += p[k];
    }
    for (int k = 0; k < classes; ++k) p[k] /= z;

    const Ensemble e = train(m, cfg);
    require(static_cast<int>(e.trees.size()) == classes,
            "round count is not one tree per class");

    for (int k = 0; k < classes; ++k) {
      std::vector<double> g(n), h(n);
      for (int i = 0; i < n; ++i) {
        g[i] = p[k] - (m.labels[i] == k ? 1.0 : 0.0);
        h[i] = p[k] * (1.0 - p[k]);
      }
      const std::vector<Stump> all = enumerate_stumps(m, g, h, cfg);
      Stump want;
      for (const Stump& c : all)
        if (stump_better(c, want)) want = c;
      const Tree& tree = e.trees[k];
      const TreeNode& root = tree.nodes[0];
      const std::string tag =
          "dataset " + std::to_string(ds) + " class " + std::to_string(k);

      double g_all = 0.0, h_all = 0.0;
      for (int i = 0; i < n; ++i) {
        g_all += g[i];
        h_all += h[i];
      }
      if (!want.valid || !(want.gain > cfg.gamma)) {
        require(root.is_leaf, tag + ": trained a split, enumeration found none");
        if (root.is_leaf) {
          const double w =
              -g_all / (h_all + cfg.lambda) * cfg.learning_rate;
          require(std::fabs(root.weight - w) <= kTol,
                  tag + ": leaf weight off closed form");
        }
        ++checked_trees;
        continue;
      }
      require(!root.is_leaf, tag + ": trained a leaf, enumeration found gain " +
                                 std::to_string(want.gain));
      if (root.is_leaf) continue;

      // Mirror partitions (left/right counts swapped) tie exactly in real
      // arithmetic, so the trained split must be one of the candidates at
      // the optimum gain, not necessarily the first in enumeration order.
      const Stump* match = nullptr;
      for (const Stump& c : all) {
        if (c.feature == root.feature && c.default_left == root.default_left &&
            (c.threshold == root.threshold ||
             std::fabs(c.threshold - root.threshold) <= kTol))
          match = &c;
      }
      require(match != nullptr,
              tag + ": trained split is not an enumerated candidate");
      if (!match) continue;
      require(match->gain >= want.gain - kTol,
              tag + ": trained candidate gain " + std::to_string(match->gain) +
                  " below enumeration optimum " + std::to_string(want.gain));
      require(std::fabs(root.stats.gain - want.gain) <= kTol,
              tag + ": gain " + std::to_string(root.stats.gain) +
                  " vs enumeration " + std::to_string(want.gain));

      double gl = 0.0, hl = 0.0, gr = 0.0, hr = 0.0;
      for (int i = 0; i < n; ++i) {
        const bool left = m.is_present(i, root.feature)
                              ? m.value(i, root.feature) < root.threshold
                              : root.default_left;
        if (left) {
          gl += g[i];
          hl += h[i];
        } else {
          gr += g[i];
          hr += h[i];
        }
      }
      const double wl = -gl / (hl + cfg.lambda) * cfg.learning_rate;
      const double wr = -gr / (hr + cfg.lambda) * cfg.learning_rate;
      require(std::fabs(tree.nodes[root.left].weight - wl) <= kTol,
              tag + ": left leaf weight off closed form");
      require(std::fabs(tree.nodes[root.right].weight - wr) <= kTol,
              tag + ": right leaf weight off closed form");
      ++checked_trees;
    }
  }
  require(checked_trees >= 400, "too few trees compared");
  const double elapsed = seconds_since(t0);
  require(elapsed < 30.0,
          "stump enumeration took " + std::to_string(elapsed) + " s");
}

// ---- 6. missing-value routing is locally optimal ------------------------

void check_missing_routing() {
  std::mt19937_64 rng(606);
  std::uniform_real_distribution<double> value(0.0, 1.0);
  TrainConfig cfg;
  cfg.rounds = 6;
  cfg.max_depth = 3;
  cfg.min_child_weight = 0.25;
  int nodes_checked = 0, nodes_with_missing = 0;

  for (int ds = 0; ds < 20; ++ds) {
    const int n = 40, d = 4;
    TrainMatrix m;
    for (int j = 0; j < d; ++j) m.column_names.push_back("f" + std::to_string(j));
    m.resize(n, d);
    for (int i = 0; i < n; ++i) {
      m.groups[i] = "s" + std::to_string(i % 8);
      const double z = value(rng);
      m.labels[i] = std::min(2, static_cast<int>(z * 3.0));
      // informative columns carry missing cells too, so the trained trees
      // actually have to route missing rows at their split nodes
      bool any = false;
      for (int j = 0; j < d; ++j) {
        if (rng() % 10 < 3) {
          m.set_missing(i, j);
        } else {
          m.set(i, j, j < 2 ? z + 0.1 * value(rng) : value(rng));
          any = true;
        }
      }
      if (!any) m.set(i, 0, z);
    }
    const Ensemble e = train(m, cfg);
    require(!audit_default_directions(e).has_value(),
            "library audit flagged dataset " + std::to_string(ds));

    for (std::size_t t = 0; t < e.trees.size(); ++t) {
      for (const TreeNode& nd : e.trees[t].nodes) {
        if (nd.is_leaf) continue;
        const SplitStats& s = nd.stats;
        const double g = s.g_left + s.g_right + s.g_missing;
        const double h = s.h_left + s.h_right + s.h_missing;
        auto routed = [&](bool left) -> std::optional<double> {
          const double gl = s.g_left + (left ? s.g_missing : 0.0);
          const double hl = s.h_left + (left ? s.h_missing : 0.0);
          const double gr = s.g_right + (left ? 0.0 : s.g_missing);
          const double hr = s.h_right + (left ? 0.0 : s.h_missing);
          const int nl = s.n_left + (left ? s.n_missing : 0);
          const int nr = s.n_right + (left ? 0 : s.n_missing);
          if (nl < 1 || nr < 1 || hl < cfg.min_child_weight ||
              hr < cfg.min_child_weight)
            return std::nullopt;
          return stump_gain(gl, hl, gr, hr, g, h, cfg.lambda);
        };
        const auto chosen = routed(nd.default_left);
        require(chosen.has_value(), "recorded routing is inadmissible");
        if (!chosen) continue;
        require(std::fabs(*chosen - s.gain) <= 1e-9,
                "stored gain does not replay from its gradient sums");
        const auto flipped = routed(!nd.default_left);
        if (flipped)
          require(*flipped <= *chosen + 1e-12,
                  "flipping the missing direction raised gain by " +
                      std::to_string(*flipped - *chosen));
        ++nodes_checked;
        if (s.n_missing > 0) ++nodes_with_missing;
      }
    }
  }
  require(nodes_checked > 100, "too few internal nodes audited");
  require(nodes_with_missing > 20,
          "too few audited nodes actually carried missing rows");
}

// ---- 7. leave-one-speaker-out integrity ---------------------------------

void check_loso_integrity() {
  std::vector<std::string> groups;
  for (int s = 0; s < 12; ++s)
    for (int k = 0; k < 1 + s % 4; ++k)
      groups.push_back("spk" + std::to_string(s));
  std::shuffle(groups.begin(), groups.end(), std::mt19937_64(707));

  const std::vector<Fold> folds = loso_folds(groups);
  const std::set<std::string> speakers(groups.begin(), groups.end());
  require(folds.size() == speakers.size(),
          "fold count " + std::to_string(folds.size()) + " != " +
              std::to_string(speakers.size()) + " speakers");

  std::set<std::string> held;
  for (const Fold& f : folds) {
    held.insert(f.held_out);
    require(!f.test_rows.empty(), "empty test set for " + f.held_out);
    std::vector<int> seen(groups.size(), 0);
    for (int r : f.test_rows) {
      ++seen[r];
      require(groups[r] == f.held_out,
              "test row of a different speaker in fold " + f.held_out);
    }
    for (int r : f.train_rows) {
      ++seen[r];
      require(groups[r] != f.held_out,
              "held-out speaker leaked into training in fold " + f.held_out);
    }
    for (int c : seen)
      require(c == 1, "rows not partitioned exactly once in " + f.held_out);
  }
  require(held == speakers, "every speaker must be held out exactly once");
}

// ---- 8. assembly strategy masks -----------------------------------------

void check_strategy_masks() {
  // three features stand in for the nested per-language selections
  const std::string A = "jitter", B = "shimmer", C = "hnr";
  auto table_for = [&](const std::string& lang) {
    FeatureTable t;
    t.language = lang;
    for (int i = 0; i < 2; ++i) {
      UtteranceRow r;
      r.utterance_id = lang + "_u" + std::to_string(i);
      r.speaker_id = lang + "_spk" + std::to_string(i);
      r.sentence_id = "s" + std::to_string(i);
      r.severity = i == 0 ? Severity::Mild : Severity::Severe;
      r.features.set(A, 1.0 + i);
      r.features.set(B, 2.0 + i);
      r.features.set(C, 3.0 + i);
      t.rows.push_back(r);
    }
    return t;
  };
  const std::vector<FeatureTable> tables = {table_for("en"), table_for("ko"),
                                            table_for("ta")};
  const std::map<std::string, std::set<std::string>> sets = {
      {"en", {A}}, {"ko", {A, B}}, {"ta", {A, B, C}}};

  const CrossTable inter = assemble(tables, sets, Strategy::Intersection);
  const CrossTable uni = assemble(tables, sets, Strategy::Union);
  const CrossTable prop = assemble(tables, sets, Strategy::Proposed);

  require(inter.columns == std::vector<std::string>{A},
          "intersection columns are not the common feature");
  require(uni.columns == std::vector<std::string>{A, B, C},
          "union columns are not the pooled features");
  require(prop.columns == uni.columns,
          "proposed columns differ from the union columns");

  for (std::size_t r = 0; r < inter.n_rows(); ++r)
    require(inter.is_present(r, 0), "intersection left a gap in " + A);
  for (std::size_t r = 0; r < uni.n_rows(); ++r)
    for (std::size_t j = 0; j < uni.n_cols(); ++j)
      require(uni.is_present(r, j), "union dropped an extracted value");

  // proposed: a cell survives only when its language selected the feature
  for (std::size_t r = 0; r < prop.n_rows(); ++r) {
    const std::set<std::string>& keep = sets.at(prop.rows[r].language);
    for (std::size_t j = 0; j < prop.n_cols(); ++j) {
      const bool want = keep.count(prop.columns[j]) > 0;
      require(prop.is_present(r, j) == want,
              "proposed mask wrong at " + prop.rows[r].utterance_id + " / " +
                  prop.columns[j]);
      if (prop.is_present(r, j))
        require(prop.value(r, j) ==
                    uni.value(r, j),
                "proposed changed a surviving value");
    }
  }

  // presence sets nest: intersection within proposed within union
  auto present_set = [](const CrossTable& ct) {
    std::set<std::pair<std::string, std::string>> cells;
    for (std::size_t r = 0; r < ct.n_rows(); ++r)
      for (std::size_t j = 0; j < ct.n_cols(); ++j)
        if (ct.is_present(r, j))
          cells.insert({ct.rows[r].utterance_id, ct.columns[j]});
    return cells;
  };
  const auto ci = present_set(inter), cp = present_set(prop),
             cu = present_set(uni);
  require(std::includes(cp.begin(), cp.end(), ci.begin(), ci.end()),
          "intersection cells are not a subset of proposed cells");
  require(std::includes(cu.begin(), cu.end(), cp.begin(), cp.end()),
          "proposed cells are not a subset of union cells");
}

// ---- 9. proposed vs intersection on a language-unique feature -----------

double strategy_macro_f1(const std::vector<FeatureTable>& tables,
                         const std::map<std::string, std::set<std::string>>& sets,
                         Strategy strategy, const TrainConfig& cfg) {
  const CrossTable ct = assemble(tables, sets, strategy);
  const TrainMatrix m = to_matrix(ct);
  std::vector<std::string> langs;
  for (const CrossRow& r : ct.rows) langs.push_back(r.language);
  return evaluate_loso(m, cfg, langs).macro_f1;
}

void check_strategy_margin() {
  const auto t0 = Clock::now();
  TrainConfig cfg;
  cfg.rounds = 12;
  cfg.max_depth = 3;
  cfg.min_child_weight = 0.25;
  const std::map<std::string, std::set<std::string>> sets = {
      {"en", {"jitter", "shimmer"}},
      {"ko", {"jitter", "shimmer"}},
      {"ta", {"jitter", "shimmer", "hnr"}}};

  double margin_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> weak(0.0, 1.2), sharp(0.0, 0.15);
    auto language_table = [&](const std::string& lang, bool unique_feature) {
      FeatureTable t;
      t.language = lang;
      for (int spk = 0; spk < 12; ++spk) {
        const auto sev = static_cast<Severity>(spk / 4);
        for (int utt = 0; utt < 3; ++utt) {
          UtteranceRow r;
          r.utterance_id = lang + "_" + std::to_string(spk * 3 + utt);
          r.speaker_id = "spk" + std::to_string(spk);
          r.sentence_id = "s" + std::to_string(utt);
          r.severity = sev;
          const double y = static_cast<double>(sev);
          r.features.set("jitter", y + weak(rng));
          r.features.set("shimmer", y + weak(rng));
          if (unique_feature) r.features.set("hnr", 2.0 * y + sharp(rng));
          t.rows.push_back(std::move(r));
        }
      }
      return t;
    };
    const std::vector<FeatureTable> tables = {language_table("en", false),
                                              language_table("ko", false),
                                              language_table("ta", true)};
    const double inter =
        strategy_macro_f1(tables, sets, Strategy::Intersection, cfg);
    const double prop =
        strategy_macro_f1(tables, sets, Strategy::Proposed, cfg);
    margin_sum += prop - inter;
  }
  const double margin = margin_sum / 10.0;
  require(margin >= 5.0,
          "proposed beat intersection by only " + fmt2(margin) +
              " macro-f1 points on average");
  const double elapsed = seconds_since(t0);
  require(elapsed < 300.0,
          "strategy comparison took " + std::to_string(elapsed) + " s");
}

// ---- 10. relative increase summary values -------------------------------

void check_relative_increase() {
  const struct {
    const char* label;
    double mono, cross;
    const char* want;
  } rows[] = {{"en", 59.03, 69.46, "17.67"},
              {"ko", 76.39, 78.13, "2.28"},
              {"ta", 49.95, 53.84, "7.79"},
              {"avg", 61.79, 67.14, "8.66"}};
  for (const auto& row : rows) {
    const std::string got = fmt2(relative_increase(row.mono, row.cross));
    require(got == row.want, std::string(row.label) + ": got " + got +
                                 ", want " + row.want);
  }
}

// ---- 11. byte-identical reruns ------------------------------------------

void check_byte_identical_rerun() {
  synth::TempDir dir("accept_rerun");
  synth::write_language_corpus(dir.path, "en", 3, 2, 21);
  synth::write_language_corpus(dir.path, "ko", 3, 2, 22);

  ExperimentSpec spec;
  spec.inputs = {{dir.path / "manifest_en.jsonl", dir.path / "config_en.json"},
                 {dir.path / "manifest_ko.jsonl", dir.path / "config_ko.json"}};
  spec.strategy = Strategy::Proposed;
  spec.train.rounds = 6;
  spec.train.max_depth = 2;
  spec.train.min_child_weight = 0.25;
  spec.seed = 11;

  spec.out_dir = dir.path / "a";
  run_experiment(spec);
  spec.out_dir = dir.path / "b";
  run_experiment(spec);

  for (const char* name : {"report.json", "cross_table.json", "model.json"}) {
    const std::string a = read_text_file(dir.path / "a" / name);
    const std::string b = read_text_file(dir.path / "b" / name);
    require(!a.empty(), std::string(name) + " is empty");
    require(a == b, std::string(name) + " differs between identical runs");
  }
}

// ---- 12. sentence-level subsample retention ------------------------------

void check_subsample_retention() {
  FeatureTable t;
  t.language = "en";
  for (int spk = 0; spk < 2; ++spk) {
    for (int s = 0; s < 260; ++s) {
      UtteranceRow r;
      char sent[16];
      std::snprintf(sent, sizeof sent, "sent%03d", s);
      r.utterance_id = "u" + std::to_string(spk * 260 + s);
      r.speaker_id = "spk" + std::to_string(spk);
      r.sentence_id = sent;
      r.severity = static_cast<Severity>(spk);
      r.features.set("jitter", 0.01 * s);
      t.rows.push_back(std::move(r));
    }
  }
  const FeatureTable kept = subsample_language(t, 0.4, 9);

  std::set<std::string> sentences;
  std::map<std::string, std::set<std::string>> per_speaker;
  for (const UtteranceRow& r : kept.rows) {
    sentences.insert(r.sentence_id);
    per_speaker[r.speaker_id].insert(r.sentence_id);
  }
  require(sentences.size() == 104,
          "kept " + std::to_string(sentences.size()) +
              " distinct sentences, want 104");
  require(per_speaker.size() == 2, "a speaker vanished from the subsample");
  for (const auto& [spk, ids] : per_speaker)
    require(ids == sentences,
            spk + " kept a different sentence set than the corpus-wide one");
  require(kept.rows.size() == 2 * 104, "row count is not speakers * sentences");
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void()>>> checks = {
      {"phoneme correctness anchor values", check_anchor_percentages},
      {"closed-form features match brute force", check_formula_battery},
      {"voice break threshold boundary", check_break_threshold},
      {"hnr recovery at known ratios", check_hnr_calibration},
      {"one-round stumps match exhaustive enumeration",
       check_stump_enumeration},
      {"missing-value routing locally optimal", check_missing_routing},
      {"leave-one-speaker-out fold integrity", check_loso_integrity},
      {"assembly strategy masks and nesting", check_strategy_masks},
      {"proposed strategy beats intersection", check_strategy_margin},
      {"relative increase summary values", check_relative_increase},
      {"identical reruns are byte-identical", check_byte_identical_rerun},
      {"sentence-level subsample retention", check_subsample_retention},
  };

  int failures = 0;
  for (std::size_t i = 0; i < checks.size(); ++i) {
    g_notes.clear();
    const auto t0 = Clock::now();
    try {
      checks[i].second();
    } catch (const std::exception& e) {
      g_notes.push_back(std::string("exception: ") + e.what());
    }
    const double ms = seconds_since(t0) * 1e3;
    const bool ok = g_notes.empty();
    std::printf("[%s] %2zu %s (%.1f ms)\n", ok ? "PASS" : "FAIL", i + 1,
                checks[i].first.c_str(), ms);
    for (const std::string& note : g_notes)
      std::printf("        %s\n", note.c_str());
    if (!ok) ++failures;
  }
  std::printf("%zu/%zu acceptance checks passed\n", checks.size() - failures,
              checks.size());
  return failures;
}
