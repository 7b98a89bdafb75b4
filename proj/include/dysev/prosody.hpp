#pragma once

// Prosodic features over a phone-aligned utterance: speech-rate block,
// pitch and energy statistics, and the duration-based rhythm metrics
// (%V, deltas, Varco, raw and normalized pairwise variability indices).

#include <algorithm>
#include <cmath>
#include <optional>
#include <vector>

#include "dysev/common.hpp"
#include "dysev/pitch.hpp"
#include "dysev/signal.hpp"
#include "dysev/textgrid.hpp"

namespace dysev {

struct SpeechRateFeatures {
  double speaking_rate = 0.0;  // syllables / total duration
  std::optional<double> articulation_rate;  // syllables / phonation time
  int n_pauses = 0;
  double pause_duration = 0.0;
  double phone_ratio = 0.0;  // non-silent time / total duration
};

// Syllable count is the number of vocalic runs. A pause is a silence run
// strictly longer than the threshold; shorter silences still count as
// non-phonation for phone_ratio but not as pauses.
inline SpeechRateFeatures speech_rate_features(const Tier& tier,
                                               const PhoneClassMap& map,
                                               double pause_threshold_s = 0.1) {
  const double total = tier.xmax - tier.xmin;
  if (total <= 0.0) throw config_error("tier has no duration");
  SpeechRateFeatures out;
  int syllables = 0;
  double silent = 0.0;
  for (const SegmentRun& run : classify_runs(tier, map)) {
    const double dur = run.end - run.start;
    if (run.cls == PhoneClass::Vowel) ++syllables;
    if (run.cls == PhoneClass::Silence) {
      silent += dur;
      if (dur > pause_threshold_s) {
        ++out.n_pauses;
        out.pause_duration += dur;
      }
    }
  }
  out.speaking_rate = syllables / total;
  if (total - out.pause_duration > 0.0)
    out.articulation_rate = syllables / (total - out.pause_duration);
  out.phone_ratio = (total - silent) / total;
  return out;
}

struct StatSummary {
  double mean = 0.0, std = 0.0, min = 0.0, max = 0.0, range = 0.0;
};

namespace detail {

inline StatSummary summarize(const std::vector<double>& v) {
  StatSummary s;
  s.mean = mean(v);
  s.std = population_std(v);
  s.min = *std::min_element(v.begin(), v.end());
  s.max = *std::max_element(v.begin(), v.end());
  s.range = s.max - s.min;
  return s;
}

}  // namespace detail

// Statistics over voiced frames only (f0 > 0).
inline StatSummary pitch_stats(const PitchTrack& p) {
  std::vector<double> voiced;
  for (double f : p.f0)
    if (f > 0.0) voiced.push_back(f);
  if (voiced.empty())
    throw feature_error("no_voiced_frames", "pitch track is fully unvoiced");
  return detail::summarize(voiced);
}

// Statistics over frames above the silence floor.
inline StatSummary energy_stats(const EnergyTrack& e) {
  std::vector<double> live;
  for (double db : e.energy_db)
    if (db > EnergyTrack::kFloorDb) live.push_back(db);
  if (live.empty())
    throw feature_error("all_frames_silent", "energy track is all floor");
  return detail::summarize(live);
}

struct RhythmMetrics {
  std::optional<double> percent_v;
  std::optional<double> delta_v, delta_c;
  std::optional<double> varco_v, varco_c;
  std::optional<double> rpvi_v, rpvi_c;
  std::optional<double> npvi_v, npvi_c;
};

namespace detail {

inline std::optional<double> rpvi(const std::vector<double>& d) {
  if (d.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k)
    sum += std::fabs(d[k] - d[k + 1]);
  return sum / (static_cast<double>(d.size()) - 1.0);
}

inline std::optional<double> npvi(const std::vector<double>& d) {
  if (d.size() < 2) return std::nullopt;
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < d.size(); ++k)
    sum += std::fabs(d[k] - d[k + 1]) / ((d[k] + d[k + 1]) / 2.0);
  return 100.0 * sum / (static_cast<double>(d.size()) - 1.0);
}

}  // namespace detail

// Metrics that lack enough runs of the relevant class stay unset rather
// than erroring; callers record the reason.
inline RhythmMetrics rhythm_metrics(const std::vector<SegmentRun>& runs) {
  std::vector<double> voc, con;
  double voc_time = 0.0, con_time = 0.0;
  for (const SegmentRun& run : runs) {
    const double dur = run.end - run.start;
    if (run.cls == PhoneClass::Vowel) {
      voc.push_back(dur);
      voc_time += dur;
    } else if (run.cls == PhoneClass::Consonant) {
      con.push_back(dur);
      con_time += dur;
    }
  }

  RhythmMetrics m;
  if (voc_time > 0.0 && con_time > 0.0)
    m.percent_v = 100.0 * voc_time / (voc_time + con_time);
  if (voc.size() >= 2) {
    double dv = detail::population_std(voc);
    m.delta_v = dv;
    m.varco_v = dv * 100.0 / detail::mean(voc);
  }
  if (con.size() >= 2) {
    double dc = detail::population_std(con);
    m.delta_c = dc;
    m.varco_c = dc * 100.0 / detail::mean(con);
  }
  m.rpvi_v = detail::rpvi(voc);
  m.rpvi_c = detail::rpvi(con);
  m.npvi_v = detail::npvi(voc);
  m.npvi_c = detail::npvi(con);
  return m;
}

}  // namespace dysev
