#pragma once

// Corner-vowel formant measurement (Burg LPC at interval midpoints) and the
// vowel-space metrics built on it: triangular and quadrilateral vowel space
// area, formant centralization ratio, vowel articulation index, F2 ratio.

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <optional>
#include <span>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/textgrid.hpp"
#include "dysev/wav.hpp"

namespace dysev {

struct FormantConfig {
  double window_s = 0.025;
  double pre_emphasis_hz = 50.0;
  double max_bandwidth_hz = 400.0;
  double min_freq_hz = 100.0;
  double max_freq_hz = 4000.0;
  int order(int sample_rate) const {
    return 2 + static_cast<int>(std::lrint(sample_rate / 1000.0));
  }
};

struct FormantPair {
  double f1 = 0.0, f2 = 0.0;
};

// Per-utterance corner-vowel formants. Categories with no measurable
// occurrence stay absent until filled from the speaker fallback means.
struct VowelFormants {
  std::array<std::optional<FormantPair>, 4> corner;  // indexed by CornerVowel
  std::optional<double> front_f2, back_f2;           // F2-ratio pair

  const std::optional<FormantPair>& at(CornerVowel c) const {
    return corner[static_cast<int>(c)];
  }
  std::optional<FormantPair>& at(CornerVowel c) {
    return corner[static_cast<int>(c)];
  }
};

namespace detail {

// Burg's method; returns a_1..a_p of the inverse filter 1 + Σ a_k z^-k.
inline std::vector<double> lpc_burg(std::span<const double> x, int order) {
  const std::size_t n = x.size();
  if (order < 1 || n <= static_cast<std::size_t>(order))
    throw config_error("LPC order must fit inside the analysis window");
  std::vector<double> a(order + 1, 0.0);
  a[0] = 1.0;
  std::vector<double> f(x.begin(), x.end()), b(x.begin(), x.end());
  for (int m = 1; m <= order; ++m) {
    double num = 0.0, den = 0.0;
    for (std::size_t t = m; t < n; ++t) {
      num += f[t] * b[t - 1];
      den += f[t] * f[t] + b[t - 1] * b[t - 1];
    }
    double k = den > 0.0 ? -2.0 * num / den : 0.0;
    std::vector<double> next(a);
    for (int i = 1; i <= m; ++i) next[i] = a[i] + k * a[m - i];
    a = std::move(next);
    std::vector<double> fn(n), bn(n);
    for (std::size_t t = n - 1; t >= static_cast<std::size_t>(m); --t) {
      fn[t] = f[t] + k * b[t - 1];
      bn[t] = b[t - 1] + k * f[t];
    }
    f = std::move(fn);
    b = std::move(bn);
  }
  return {a.begin() + 1, a.end()};
}

// Roots of z^p + a_1 z^{p-1} + ... + a_p via the companion matrix.
inline std::vector<std::complex<double>> poly_roots(
    const std::vector<double>& a) {
  const int p = static_cast<int>(a.size());
  Eigen::MatrixXd companion = Eigen::MatrixXd::Zero(p, p);
  for (int i = 0; i < p; ++i) companion(0, i) = -a[i];
  for (int i = 1; i < p; ++i) companion(i, i - 1) = 1.0;
  Eigen::EigenSolver<Eigen::MatrixXd> solver(companion, false);
  std::vector<std::complex<double>> roots(p);
  for (int i = 0; i < p; ++i) roots[i] = solver.eigenvalues()(i);
  return roots;
}

}  // namespace detail

// LPC analysis of one window centered at time t; returns the two lowest
// admissible formants, or nullopt when fewer than two are found.
inline std::optional<FormantPair> formants_at(const Waveform& w, double t,
                                              const FormantConfig& cfg = {}) {
  const double sr = w.sample_rate;
  const auto win = static_cast<std::size_t>(std::lrint(cfg.window_s * sr));
  const int order = cfg.order(w.sample_rate);
  if (win <= static_cast<std::size_t>(order) + 1) return std::nullopt;
  auto center = static_cast<long>(std::lrint(t * sr));
  long start = center - static_cast<long>(win) / 2;
  if (start < 0) start = 0;
  if (start + static_cast<long>(win) > static_cast<long>(w.samples.size()))
    start = static_cast<long>(w.samples.size()) - static_cast<long>(win);
  if (start < 0) return std::nullopt;

  std::vector<double> seg(w.samples.begin() + start,
                          w.samples.begin() + start + win);
  const double alpha = std::exp(-2.0 * M_PI * cfg.pre_emphasis_hz / sr);
  for (std::size_t i = seg.size() - 1; i >= 1; --i)
    seg[i] -= alpha * seg[i - 1];

  std::vector<double> freqs;
  for (const auto& z : detail::poly_roots(detail::lpc_burg(seg, order))) {
    if (z.imag() <= 0.0) continue;
    double mag = std::abs(z);
    if (mag <= 0.0 || mag >= 1.0) continue;
    double freq = std::atan2(z.imag(), z.real()) * sr / (2.0 * M_PI);
    double bandwidth = -std::log(mag) * sr / M_PI;
    if (bandwidth < cfg.max_bandwidth_hz && freq > cfg.min_freq_hz &&
        freq < cfg.max_freq_hz)
      freqs.push_back(freq);
  }
  if (freqs.size() < 2) return std::nullopt;
  std::sort(freqs.begin(), freqs.end());
  return FormantPair{freqs[0], freqs[1]};
}

// Measures formants at the midpoint of every corner-vowel interval (and of
// the configured front/back F2 pair) and averages per category. Intervals
// shorter than one analysis window are skipped.
inline VowelFormants vowel_formants(const Waveform& w, const Tier& tier,
                                    const PhoneClassMap& map,
                                    const FormantConfig& cfg = {}) {
  struct Accum {
    double f1 = 0.0, f2 = 0.0;
    int n = 0;
  };
  std::array<Accum, 4> corner_acc{};
  Accum front_acc, back_acc;
  bool saw_vowel = false;
  for (const Interval& iv : tier.intervals) {
    std::string label = detail::trim(iv.label);
    if (label.empty() || map.classify(label) != PhoneClass::Vowel) continue;
    saw_vowel = true;
    auto corner_it = map.corner_of.find(label);
    bool is_front = !map.front_label.empty() && label == map.front_label;
    bool is_back = !map.back_label.empty() && label == map.back_label;
    if (corner_it == map.corner_of.end() && !is_front && !is_back) continue;
    if (iv.xmax - iv.xmin < cfg.window_s) continue;
    auto measured = formants_at(w, (iv.xmin + iv.xmax) / 2.0, cfg);
    if (!measured) continue;
    if (corner_it != map.corner_of.end()) {
      Accum& acc = corner_acc[static_cast<int>(corner_it->second)];
      acc.f1 += measured->f1;
      acc.f2 += measured->f2;
      ++acc.n;
    }
    if (is_front) {
      front_acc.f2 += measured->f2;
      ++front_acc.n;
    }
    if (is_back) {
      back_acc.f2 += measured->f2;
      ++back_acc.n;
    }
  }
  if (!saw_vowel)
    throw feature_error("no_vowel_intervals",
                        "tier has no vowel-class intervals");

  VowelFormants vf;
  for (int c = 0; c < 4; ++c)
    if (corner_acc[c].n > 0)
      vf.corner[c] = FormantPair{corner_acc[c].f1 / corner_acc[c].n,
                                 corner_acc[c].f2 / corner_acc[c].n};
  if (front_acc.n > 0) vf.front_f2 = front_acc.f2 / front_acc.n;
  if (back_acc.n > 0) vf.back_f2 = back_acc.f2 / back_acc.n;
  return vf;
}

// Per-speaker fallback: average of the utterance-level values, used to fill
// categories a single utterance lacks. Filling must happen only after every
// utterance of the speaker has been measured.
struct SpeakerFormantMeans {
  std::array<std::optional<FormantPair>, 4> corner;
  std::optional<double> front_f2, back_f2;
};

inline SpeakerFormantMeans speaker_formant_means(
    std::span<const VowelFormants> utterances) {
  struct Accum {
    double f1 = 0.0, f2 = 0.0;
    int n = 0;
  };
  std::array<Accum, 4> acc{};
  Accum front_acc, back_acc;
  for (const VowelFormants& vf : utterances) {
    for (int c = 0; c < 4; ++c)
      if (vf.corner[c]) {
        acc[c].f1 += vf.corner[c]->f1;
        acc[c].f2 += vf.corner[c]->f2;
        ++acc[c].n;
      }
    if (vf.front_f2) {
      front_acc.f2 += *vf.front_f2;
      ++front_acc.n;
    }
    if (vf.back_f2) {
      back_acc.f2 += *vf.back_f2;
      ++back_acc.n;
    }
  }
  SpeakerFormantMeans m;
  for (int c = 0; c < 4; ++c)
    if (acc[c].n > 0)
      m.corner[c] = FormantPair{acc[c].f1 / acc[c].n, acc[c].f2 / acc[c].n};
  if (front_acc.n > 0) m.front_f2 = front_acc.f2 / front_acc.n;
  if (back_acc.n > 0) m.back_f2 = back_acc.f2 / back_acc.n;
  return m;
}

inline VowelFormants fill_missing_formants(const VowelFormants& vf,
                                           const SpeakerFormantMeans& means) {
  VowelFormants out = vf;
  for (int c = 0; c < 4; ++c)
    if (!out.corner[c] && means.corner[c]) out.corner[c] = means.corner[c];
  if (!out.front_f2 && means.front_f2) out.front_f2 = means.front_f2;
  if (!out.back_f2 && means.back_f2) out.back_f2 = means.back_f2;
  return out;
}

namespace detail {

inline const FormantPair& need_corner(const VowelFormants& vf, CornerVowel c) {
  const auto& slot = vf.at(c);
  if (!slot)
    throw feature_error("missing_corner_vowel",
                        std::string("no formants for corner vowel '") +
                            to_string(c) + "'");
  return *slot;
}

}  // namespace detail

// Triangle /i a u/ area by the shoelace formula, in Hz².
inline double vsa_tri(const VowelFormants& vf) {
  const FormantPair& i = detail::need_corner(vf, CornerVowel::I);
  const FormantPair& a = detail::need_corner(vf, CornerVowel::A);
  const FormantPair& u = detail::need_corner(vf, CornerVowel::U);
  return 0.5 * std::fabs(i.f1 * (a.f2 - u.f2) + a.f1 * (u.f2 - i.f2) +
                         u.f1 * (i.f2 - a.f2));
}

// Quadrilateral /i ae a u/ area by the shoelace formula, in Hz².
inline double vsa_quad(const VowelFormants& vf) {
  const FormantPair pts[4] = {detail::need_corner(vf, CornerVowel::I),
                              detail::need_corner(vf, CornerVowel::AE),
                              detail::need_corner(vf, CornerVowel::A),
                              detail::need_corner(vf, CornerVowel::U)};
  double twice = 0.0;
  for (int k = 0; k < 4; ++k) {
    const FormantPair& p = pts[k];
    const FormantPair& q = pts[(k + 1) % 4];
    twice += p.f1 * q.f2 - q.f1 * p.f2;
  }
  return 0.5 * std::fabs(twice);
}

inline double fcr(const VowelFormants& vf) {
  const FormantPair& i = detail::need_corner(vf, CornerVowel::I);
  const FormantPair& a = detail::need_corner(vf, CornerVowel::A);
  const FormantPair& u = detail::need_corner(vf, CornerVowel::U);
  return (u.f2 + a.f2 + i.f1 + u.f1) / (i.f2 + a.f1);
}

inline double vai(const VowelFormants& vf) {
  const FormantPair& i = detail::need_corner(vf, CornerVowel::I);
  const FormantPair& a = detail::need_corner(vf, CornerVowel::A);
  const FormantPair& u = detail::need_corner(vf, CornerVowel::U);
  return (i.f2 + a.f1) / (u.f2 + a.f2 + i.f1 + u.f1);
}

inline double f2_ratio(const VowelFormants& vf) {
  if (!vf.front_f2 || !vf.back_f2)
    throw feature_error("missing_f2_pair",
                        "front/back vowel F2 pair is incomplete");
  return *vf.front_f2 / *vf.back_f2;
}

}  // namespace dysev
