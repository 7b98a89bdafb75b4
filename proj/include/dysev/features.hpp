#pragma once

// The full 39-feature clinical vector for one utterance, plus the optional
// 26-value MFCC block. Every slot is value-or-missing; missing slots carry a
// short reason code so downstream tables can explain their gaps.

#include <array>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dysev/alignment.hpp"
#include "dysev/common.hpp"
#include "dysev/formants.hpp"
#include "dysev/mfcc.hpp"
#include "dysev/pitch.hpp"
#include "dysev/prosody.hpp"
#include "dysev/signal.hpp"
#include "dysev/textgrid.hpp"
#include "dysev/voice_quality.hpp"
#include "dysev/wav.hpp"

namespace dysev {

inline constexpr int kFeatureCount = 39;

// Canonical column order: voice quality, phoneme correctness, vowel
// distortion, speech rate, pitch, loudness, rhythm.
inline const std::array<std::string, kFeatureCount>& feature_names() {
  static const std::array<std::string, kFeatureCount> names = {
      "jitter",        "shimmer",
      "ppq",           "apq",
      "hnr",           "n_voice_breaks",
      "deg_voice_breaks",
      "pcc",           "pcv",
      "pct",
      "vsa_tri",       "vsa_quad",
      "fcr",           "vai",
      "f2_ratio",
      "speaking_rate", "articulation_rate",
      "n_pauses",      "pause_duration",
      "phone_ratio",
      "f0_mean",       "f0_std",
      "f0_min",        "f0_max",
      "f0_range",
      "energy_mean",   "energy_std",
      "energy_min",    "energy_max",
      "energy_range",
      "percent_v",     "delta_v",
      "delta_c",       "varco_v",
      "varco_c",       "rpvi_v",
      "rpvi_c",        "npvi_v",
      "npvi_c"};
  return names;
}

inline int feature_index(std::string_view name) {
  const auto& names = feature_names();
  for (int i = 0; i < kFeatureCount; ++i)
    if (names[i] == name) return i;
  return -1;
}

struct FeatureVector {
  std::array<std::optional<double>, kFeatureCount> values{};
  std::map<std::string, std::string> missing_reasons;  // name -> code
  std::optional<std::array<double, kMfccStatCount>> mfcc;

  void set(std::string_view name, double v) {
    values[checked_index(name)] = v;
    missing_reasons.erase(std::string(name));
  }
  void mark_missing(std::string_view name, std::string code) {
    values[checked_index(name)].reset();
    missing_reasons[std::string(name)] = std::move(code);
  }
  const std::optional<double>& get(std::string_view name) const {
    return values[checked_index(name)];
  }
  int present_count() const {
    int n = 0;
    for (const auto& v : values) n += v.has_value() ? 1 : 0;
    return n;
  }

  bool operator==(const FeatureVector&) const = default;

 private:
  static int checked_index(std::string_view name) {
    int i = feature_index(name);
    if (i < 0)
      throw config_error("unknown feature name '" + std::string(name) + "'");
    return i;
  }
};

struct AnalysisConfig {
  PitchConfig pitch;
  FormantConfig formant;
  MfccConfig mfcc;
  double pause_threshold_s = 0.1;
  double voice_break_threshold_s = kVoiceBreakThresholdS;
  bool compute_mfcc = true;
};

// Extraction result plus the raw per-utterance formants; the caller may fill
// missing formant categories from speaker-level means and re-apply.
struct UtteranceFeatures {
  FeatureVector features;
  VowelFormants formants;
};

// Computes (or re-computes after imputation) the five vowel-space slots.
inline void apply_formant_features(FeatureVector& fv, const VowelFormants& vf) {
  auto put = [&](std::string_view name, auto&& compute) {
    try {
      fv.set(name, compute());
    } catch (const feature_error& e) {
      fv.mark_missing(name, e.code);
    }
  };
  put("vsa_tri", [&] { return vsa_tri(vf); });
  put("vsa_quad", [&] { return vsa_quad(vf); });
  put("fcr", [&] { return fcr(vf); });
  put("vai", [&] { return vai(vf); });
  put("f2_ratio", [&] { return f2_ratio(vf); });
}

namespace detail {

template <class Names>
void mark_all(FeatureVector& fv, const Names& names, const std::string& code) {
  for (std::string_view n : names) fv.mark_missing(n, code);
}

}  // namespace detail

// Runs the whole per-utterance chain. Unrecoverable input problems (bad tier,
// unknown phone labels) throw; per-feature precondition failures degrade to
// missing slots with the failing reason code.
inline UtteranceFeatures extract_all(const Waveform& w, const Tier& phones,
                                     const std::vector<std::string>& canonical,
                                     const std::vector<std::string>& decoded,
                                     const PhoneClassMap& map,
                                     const AnalysisConfig& cfg = {}) {
  UtteranceFeatures out;
  FeatureVector& fv = out.features;
  const std::vector<SegmentRun> runs = classify_runs(phones, map);

  // Speech rate block.
  {
    SpeechRateFeatures sr =
        speech_rate_features(phones, map, cfg.pause_threshold_s);
    fv.set("speaking_rate", sr.speaking_rate);
    if (sr.articulation_rate)
      fv.set("articulation_rate", *sr.articulation_rate);
    else
      fv.mark_missing("articulation_rate", "no_phonation_time");
    fv.set("n_pauses", sr.n_pauses);
    fv.set("pause_duration", sr.pause_duration);
    fv.set("phone_ratio", sr.phone_ratio);
  }

  // Rhythm block.
  {
    RhythmMetrics rm = rhythm_metrics(runs);
    auto put = [&](std::string_view name, const std::optional<double>& v,
                   const char* code) {
      if (v)
        fv.set(name, *v);
      else
        fv.mark_missing(name, code);
    };
    put("percent_v", rm.percent_v, "missing_segment_class");
    put("delta_v", rm.delta_v, "too_few_vocalic_runs");
    put("varco_v", rm.varco_v, "too_few_vocalic_runs");
    put("rpvi_v", rm.rpvi_v, "too_few_vocalic_runs");
    put("npvi_v", rm.npvi_v, "too_few_vocalic_runs");
    put("delta_c", rm.delta_c, "too_few_consonantal_runs");
    put("varco_c", rm.varco_c, "too_few_consonantal_runs");
    put("rpvi_c", rm.rpvi_c, "too_few_consonantal_runs");
    put("npvi_c", rm.npvi_c, "too_few_consonantal_runs");
  }

  // Phoneme correctness block.
  {
    PhonemeCorrectness pc = phoneme_correctness(canonical, decoded, map);
    auto put = [&](std::string_view name, const std::optional<double>& v,
                   const char* code) {
      if (v)
        fv.set(name, *v);
      else
        fv.mark_missing(name, code);
    };
    put("pcc", pc.pcc, "no_canonical_consonants");
    put("pcv", pc.pcv, "no_canonical_vowels");
    put("pct", pc.pct, "empty_canonical_sequence");
  }

  // Energy block.
  static constexpr std::array<std::string_view, 5> kEnergySlots = {
      "energy_mean", "energy_std", "energy_min", "energy_max", "energy_range"};
  try {
    EnergyTrack et = frame_energy(w);
    if (et.energy_db.empty())
      throw feature_error("audio_too_short", "no complete energy frames");
    StatSummary es = energy_stats(et);
    fv.set("energy_mean", es.mean);
    fv.set("energy_std", es.std);
    fv.set("energy_min", es.min);
    fv.set("energy_max", es.max);
    fv.set("energy_range", es.range);
  } catch (const feature_error& e) {
    detail::mark_all(fv, kEnergySlots, e.code);
  }

  // Pitch, HNR, and pulse-train voice quality.
  static constexpr std::array<std::string_view, 5> kPitchSlots = {
      "f0_mean", "f0_std", "f0_min", "f0_max", "f0_range"};
  static constexpr std::array<std::string_view, 6> kPulseSlots = {
      "jitter", "shimmer", "ppq", "apq", "n_voice_breaks",
      "deg_voice_breaks"};
  try {
    PitchTrack track = f0_contour(w, cfg.pitch);
    try {
      StatSummary ps = pitch_stats(track);
      fv.set("f0_mean", ps.mean);
      fv.set("f0_std", ps.std);
      fv.set("f0_min", ps.min);
      fv.set("f0_max", ps.max);
      fv.set("f0_range", ps.range);
    } catch (const feature_error& e) {
      detail::mark_all(fv, kPitchSlots, e.code);
    }
    try {
      fv.set("hnr", hnr_db(w, track, cfg.pitch));
    } catch (const feature_error& e) {
      fv.mark_missing("hnr", e.code);
    }
    try {
      PulseTrain pulses = pulse_train(w, track, cfg.pitch);
      CycleView cycles = vocal_cycles(pulses, cfg.voice_break_threshold_s);
      auto put = [&](std::string_view name, auto&& compute) {
        try {
          fv.set(name, compute());
        } catch (const feature_error& e) {
          fv.mark_missing(name, e.code);
        }
      };
      put("jitter", [&] { return jitter_rel(cycles.periods); });
      put("shimmer", [&] { return shimmer_rel(cycles.amplitudes); });
      put("ppq", [&] { return ppq_rel(cycles.periods); });
      put("apq", [&] { return apq_rel(cycles.amplitudes); });
      VoiceBreaks vb =
          voice_breaks(pulses, w.duration(), cfg.voice_break_threshold_s);
      fv.set("n_voice_breaks", vb.count);
      fv.set("deg_voice_breaks", vb.degree);
    } catch (const feature_error& e) {
      detail::mark_all(fv, kPulseSlots, e.code);
    }
  } catch (const feature_error& e) {
    detail::mark_all(fv, kPitchSlots, e.code);
    detail::mark_all(fv, kPulseSlots, e.code);
    fv.mark_missing("hnr", e.code);
  }

  // Vowel-space block; formants kept for the speaker imputation pass.
  try {
    out.formants = vowel_formants(w, phones, map, cfg.formant);
  } catch (const feature_error&) {
    out.formants = VowelFormants{};
  }
  apply_formant_features(fv, out.formants);

  if (cfg.compute_mfcc) {
    try {
      fv.mfcc = mfcc_stats(w, cfg.mfcc);
    } catch (const feature_error& e) {
      fv.mfcc.reset();
      fv.missing_reasons["mfcc"] = e.code;
    }
  }
  return out;
}

}  // namespace dysev
