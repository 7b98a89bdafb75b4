#pragma once

// Per-language analysis config: the phone-class map, the tier to analyze,
// and every tunable threshold of the extraction chain. One JSON file per
// language; unknown keys are rejected to catch typos early.

#include <filesystem>
#include <set>
#include <string>

#include <json.hpp>

#include "dysev/common.hpp"
#include "dysev/features.hpp"
#include "dysev/manifest.hpp"
#include "dysev/textgrid.hpp"

namespace dysev {

struct LanguageConfig {
  std::string language;
  std::string phone_tier = "phones";
  PhoneClassMap phones;
  AnalysisConfig analysis;
};

namespace detail {

inline void reject_unknown_keys(const nlohmann::json& j,
                                const std::set<std::string>& known,
                                const std::string& where) {
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!known.count(key))
      throw config_error("unknown key '" + key + "' in " + where);
  }
}

inline double num_or(const nlohmann::json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number())
    throw config_error(std::string("'") + key + "' must be a number");
  return j.at(key).get<double>();
}

inline PhoneClass phone_class_from_string(const std::string& s) {
  if (s == "vowel") return PhoneClass::Vowel;
  if (s == "consonant") return PhoneClass::Consonant;
  if (s == "silence") return PhoneClass::Silence;
  throw config_error("unknown phone class '" + s +
                     "' (expected vowel, consonant, or silence)");
}

inline CornerVowel corner_from_string(const std::string& s) {
  if (s == "i") return CornerVowel::I;
  if (s == "ae") return CornerVowel::AE;
  if (s == "a") return CornerVowel::A;
  if (s == "u") return CornerVowel::U;
  throw config_error("unknown corner vowel '" + s +
                     "' (expected i, ae, a, or u)");
}

}  // namespace detail

inline LanguageConfig language_config_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw config_error("language config must be an object");
  detail::reject_unknown_keys(
      j,
      {"language", "phone_tier", "phone_classes", "corner_vowels",
       "front_vowel", "back_vowel", "pitch", "formant", "mfcc",
       "pause_threshold_s", "voice_break_threshold_s", "compute_mfcc"},
      "language config");

  LanguageConfig cfg;
  if (!j.contains("language") || !j.at("language").is_string() ||
      j.at("language").get<std::string>().empty())
    throw config_error("language config needs a non-empty 'language'");
  cfg.language = j.at("language").get<std::string>();
  if (j.contains("phone_tier"))
    cfg.phone_tier = j.at("phone_tier").get<std::string>();
  if (cfg.phone_tier.empty())
    throw config_error("'phone_tier' must not be empty");

  cfg.phones.language = cfg.language;
  if (!j.contains("phone_classes") || !j.at("phone_classes").is_object())
    throw config_error("language config needs a 'phone_classes' object");
  for (const auto& [label, cls] : j.at("phone_classes").items()) {
    if (!cls.is_string())
      throw config_error("phone class of '" + label + "' must be a string");
    cfg.phones.class_of[label] =
        detail::phone_class_from_string(cls.get<std::string>());
  }
  if (j.contains("corner_vowels")) {
    if (!j.at("corner_vowels").is_object())
      throw config_error("'corner_vowels' must be an object");
    for (const auto& [label, corner] : j.at("corner_vowels").items()) {
      if (!corner.is_string())
        throw config_error("corner vowel of '" + label +
                           "' must be a string");
      cfg.phones.corner_of[label] =
          detail::corner_from_string(corner.get<std::string>());
    }
  }
  if (j.contains("front_vowel"))
    cfg.phones.front_label = j.at("front_vowel").get<std::string>();
  if (j.contains("back_vowel"))
    cfg.phones.back_label = j.at("back_vowel").get<std::string>();
  cfg.phones.validate();

  if (j.contains("pitch")) {
    const nlohmann::json& p = j.at("pitch");
    detail::reject_unknown_keys(p,
                                {"floor_hz", "ceiling_hz", "hop_s",
                                 "voicing_threshold", "silence_db",
                                 "octave_cost"},
                                "'pitch'");
    PitchConfig& pc = cfg.analysis.pitch;
    pc.floor_hz = detail::num_or(p, "floor_hz", pc.floor_hz);
    pc.ceiling_hz = detail::num_or(p, "ceiling_hz", pc.ceiling_hz);
    pc.hop_s = detail::num_or(p, "hop_s", pc.hop_s);
    pc.voicing_threshold =
        detail::num_or(p, "voicing_threshold", pc.voicing_threshold);
    pc.silence_db = detail::num_or(p, "silence_db", pc.silence_db);
    pc.octave_cost = detail::num_or(p, "octave_cost", pc.octave_cost);
    if (!(pc.floor_hz > 0.0) || !(pc.ceiling_hz > pc.floor_hz))
      throw config_error("pitch floor/ceiling must satisfy 0 < floor < "
                         "ceiling");
  }
  if (j.contains("formant")) {
    const nlohmann::json& f = j.at("formant");
    detail::reject_unknown_keys(f,
                                {"window_s", "pre_emphasis_hz",
                                 "max_bandwidth_hz", "min_freq_hz",
                                 "max_freq_hz"},
                                "'formant'");
    FormantConfig& fc = cfg.analysis.formant;
    fc.window_s = detail::num_or(f, "window_s", fc.window_s);
    fc.pre_emphasis_hz = detail::num_or(f, "pre_emphasis_hz",
                                        fc.pre_emphasis_hz);
    fc.max_bandwidth_hz =
        detail::num_or(f, "max_bandwidth_hz", fc.max_bandwidth_hz);
    fc.min_freq_hz = detail::num_or(f, "min_freq_hz", fc.min_freq_hz);
    fc.max_freq_hz = detail::num_or(f, "max_freq_hz", fc.max_freq_hz);
  }
  if (j.contains("mfcc")) {
    const nlohmann::json& mj = j.at("mfcc");
    detail::reject_unknown_keys(
        mj, {"pre_emphasis", "frame_s", "hop_s", "n_filters", "n_coeffs"},
        "'mfcc'");
    MfccConfig& mc = cfg.analysis.mfcc;
    mc.pre_emphasis = detail::num_or(mj, "pre_emphasis", mc.pre_emphasis);
    mc.frame_s = detail::num_or(mj, "frame_s", mc.frame_s);
    mc.hop_s = detail::num_or(mj, "hop_s", mc.hop_s);
    mc.n_filters = static_cast<int>(
        detail::num_or(mj, "n_filters", mc.n_filters));
    mc.n_coeffs = static_cast<int>(detail::num_or(mj, "n_coeffs",
                                                  mc.n_coeffs));
  }
  cfg.analysis.pause_threshold_s =
      detail::num_or(j, "pause_threshold_s", cfg.analysis.pause_threshold_s);
  cfg.analysis.voice_break_threshold_s = detail::num_or(
      j, "voice_break_threshold_s", cfg.analysis.voice_break_threshold_s);
  if (j.contains("compute_mfcc")) {
    if (!j.at("compute_mfcc").is_boolean())
      throw config_error("'compute_mfcc' must be a boolean");
    cfg.analysis.compute_mfcc = j.at("compute_mfcc").get<bool>();
  }
  return cfg;
}

inline LanguageConfig load_language_config(
    const std::filesystem::path& path) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr,
                                           false);
  if (j.is_discarded())
    throw config_error("language config " + path.string() +
                       " is not valid JSON");
  try {
    return language_config_from_json(j);
  } catch (const config_error& e) {
    throw config_error(path.string() + ": " + e.what());
  }
}

}  // namespace dysev
