#pragma once

// End-to-end experiment driver: extraction with speaker-level formant
// imputation, per-language selection, cross-lingual assembly, optional
// round-count grid search, LOSO evaluation, and artifact writing. Every
// artifact embeds an input fingerprint and the seed; report.json is always
// regenerated from the stored artifacts, so reruns with equal inputs are
// byte-identical.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "dysev/common.hpp"
#include "dysev/config.hpp"
#include "dysev/cv.hpp"
#include "dysev/features.hpp"
#include "dysev/json_io.hpp"
#include "dysev/manifest.hpp"
#include "dysev/selection.hpp"
#include "dysev/table.hpp"
#include "dysev/textgrid.hpp"
#include "dysev/wav.hpp"

namespace dysev {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& content) {
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw io_error("cannot write " + path.string());
  out << content;
  if (!out) throw io_error("error while writing " + path.string());
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

// FNV-1a over a list of byte strings, chained in order.
inline std::string fingerprint(const std::vector<std::string>& parts) {
  std::uint64_t h = 1469598103934665603ull;
  for (const std::string& p : parts) h = fnv1a64(p, h);
  return hash_hex(h);
}

// Extraction output for one language: the feature table plus per-utterance
// missing-reason codes.
struct ExtractionResult {
  FeatureTable table;
  std::map<std::string, std::map<std::string, std::string>> reasons;
};

namespace detail {

inline std::filesystem::path resolve_against(
    const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace detail

// Runs the full per-utterance chain for one manifest, then the two-pass
// speaker-level formant fill. Relative wav/textgrid paths resolve against
// the manifest's directory.
inline ExtractionResult extract_language(
    const std::filesystem::path& manifest_path, const LanguageConfig& cfg) {
  const std::vector<ManifestEntry> entries = load_manifest(manifest_path);
  const std::filesystem::path base = manifest_path.parent_path();

  ExtractionResult res;
  res.table.language = cfg.language;
  std::vector<VowelFormants> formants;
  std::vector<std::string> speakers;

  for (const ManifestEntry& e : entries) {
    if (e.language != cfg.language)
      throw config_error("extract " + e.utterance_id + ": manifest language '" +
                         e.language + "' does not match config language '" +
                         cfg.language + "'");
    try {
      Waveform w = read_wav(detail::resolve_against(base, e.wav_path));
      std::vector<Tier> tiers = parse_textgrid(
          read_text_file(detail::resolve_against(base, e.textgrid_path)));
      const Tier* phones = nullptr;
      for (const Tier& t : tiers)
        if (t.name == cfg.phone_tier) phones = &t;
      if (!phones)
        throw config_error("textgrid has no tier named '" + cfg.phone_tier +
                           "'");
      UtteranceFeatures uf =
          extract_all(w, *phones, e.canonical_phones, e.decoded_phones,
                      cfg.phones, cfg.analysis);
      res.table.rows.push_back({e.utterance_id, e.speaker_id, e.sentence_id,
                                e.severity, std::move(uf.features)});
      formants.push_back(uf.formants);
      speakers.push_back(e.speaker_id);
    } catch (const feature_error& err) {
      throw config_error("extract " + e.utterance_id + ": " + err.what());
    } catch (const parse_error& err) {
      throw config_error("extract " + e.utterance_id + ": " + err.what());
    } catch (const io_error& err) {
      throw config_error("extract " + e.utterance_id + ": " + err.what());
    } catch (const config_error& err) {
      throw config_error("extract " + e.utterance_id + ": " + err.what());
    }
  }

  // Pass 1 gathered per-utterance formants; pass 2 fills gaps from the
  // speaker means and recomputes the vowel-space slots.
  std::map<std::string, std::vector<VowelFormants>> by_speaker;
  for (std::size_t i = 0; i < formants.size(); ++i)
    by_speaker[speakers[i]].push_back(formants[i]);
  std::map<std::string, SpeakerFormantMeans> means;
  for (const auto& [speaker, collected] : by_speaker)
    means[speaker] = speaker_formant_means(collected);
  for (std::size_t i = 0; i < res.table.rows.size(); ++i) {
    VowelFormants filled =
        fill_missing_formants(formants[i], means.at(speakers[i]));
    apply_formant_features(res.table.rows[i].features, filled);
  }

  for (const UtteranceRow& r : res.table.rows)
    if (!r.features.missing_reasons.empty())
      res.reasons[r.utterance_id] = r.features.missing_reasons;
  return res;
}

inline nlohmann::json reasons_to_json(const ExtractionResult& res,
                                      const std::string& config_hash,
                                      std::uint64_t seed) {
  nlohmann::json by_utterance = nlohmann::json::object();
  for (const auto& [utt, reasons] : res.reasons)
    by_utterance[utt] = reasons;
  return {{"config_hash", config_hash},
          {"seed", seed},
          {"language", res.table.language},
          {"missing", std::move(by_utterance)}};
}

struct ExperimentSpec {
  struct LanguageInput {
    std::filesystem::path manifest, config;
  };
  std::vector<LanguageInput> inputs;
  Strategy strategy = Strategy::Proposed;
  double fraction = 1.0;
  std::string subsample_lang;  // required when fraction < 1
  TrainConfig train;
  std::vector<int> rounds_grid;  // empty = keep train.rounds
  std::uint64_t seed = 0;
  std::filesystem::path out_dir;
};

namespace detail {

inline nlohmann::json spec_params_json(const ExperimentSpec& spec) {
  return {{"strategy", to_string(spec.strategy)},
          {"fraction", spec.fraction},
          {"subsample_language", spec.subsample_lang},
          {"train", train_config_to_json(spec.train)},
          {"rounds_grid", spec.rounds_grid},
          {"seed", spec.seed}};
}

}  // namespace detail

// Fingerprint of everything the run depends on: the parameter set, each
// language config and manifest, and every referenced wav and textgrid.
inline std::string experiment_fingerprint(const ExperimentSpec& spec) {
  std::vector<std::string> parts;
  parts.push_back(detail::spec_params_json(spec).dump());
  for (const ExperimentSpec::LanguageInput& in : spec.inputs) {
    parts.push_back(read_text_file(in.config));
    const std::string manifest_text = read_text_file(in.manifest);
    parts.push_back(manifest_text);
    const std::filesystem::path base = in.manifest.parent_path();
    for (const ManifestEntry& e : parse_manifest(manifest_text)) {
      parts.push_back(
          read_text_file(detail::resolve_against(base, e.wav_path)));
      parts.push_back(
          read_text_file(detail::resolve_against(base, e.textgrid_path)));
    }
  }
  return fingerprint(parts);
}

// Rebuilds report.json (plus the confusion renderings) purely from
// run_meta.json and cross_table.json in `dir`; returns the report.
inline nlohmann::json build_report(const std::filesystem::path& dir) {
  const nlohmann::json meta =
      nlohmann::json::parse(read_text_file(dir / "run_meta.json"));
  const CrossTable ct = cross_table_from_json(
      nlohmann::json::parse(read_text_file(dir / "cross_table.json")));
  const TrainConfig train = train_config_from_json(meta.at("train"));

  std::vector<std::string> languages;
  for (const CrossRow& r : ct.rows) languages.push_back(r.language);
  CVReport cv = evaluate_loso(to_matrix(ct), train, languages);

  nlohmann::json report = cv_report_to_json(cv);
  report["config_hash"] = meta.at("config_hash");
  report["seed"] = meta.at("seed");
  report["strategy"] = meta.at("strategy");
  report["fraction"] = meta.at("fraction");
  report["subsample_language"] = meta.at("subsample_language");
  report["train"] = meta.at("train");
  write_text_file(dir / "report.json", report.dump(2) + "\n");

  const std::string stamp = "# config_hash=" +
                            meta.at("config_hash").get<std::string>() +
                            " seed=" +
                            std::to_string(meta.at("seed").get<std::uint64_t>()) +
                            "\n";
  write_text_file(dir / "confusion.txt", stamp + confusion_text(cv.confusion));
  write_text_file(dir / "confusion.csv", stamp + confusion_csv(cv.confusion));
  return report;
}

struct ExperimentResult {
  std::string config_hash;
  CrossTable table;
  TrainConfig final_train;
  CVReport report;
};

inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  if (spec.inputs.empty())
    throw config_error("experiment needs at least one language");
  if (spec.fraction < 1.0 && spec.subsample_lang.empty())
    throw config_error("fraction < 1 needs the language to subsample");

  const std::string hash = experiment_fingerprint(spec);
  const std::string stamp =
      "# config_hash=" + hash + " seed=" + std::to_string(spec.seed) + "\n";

  // Extraction (with subsampling where requested) and per-language selection.
  std::vector<FeatureTable> tables;
  std::map<std::string, std::set<std::string>> optimal_sets;
  TrainConfig train = spec.train;
  train.seed = spec.seed;
  for (const ExperimentSpec::LanguageInput& in : spec.inputs) {
    const LanguageConfig cfg = load_language_config(in.config);
    ExtractionResult ex = extract_language(in.manifest, cfg);
    if (spec.fraction < 1.0 && cfg.language == spec.subsample_lang)
      ex.table = subsample_language(ex.table, spec.fraction, spec.seed);
    write_text_file(spec.out_dir / ("features_" + cfg.language + ".csv"),
                    stamp + feature_table_to_csv(ex.table));
    write_text_file(spec.out_dir / ("missing_reasons_" + cfg.language +
                                    ".json"),
                    reasons_to_json(ex, hash, spec.seed).dump(2) + "\n");

    SelectionCurve curve = select_features(ex.table, train);
    nlohmann::json cj = selection_curve_to_json(curve);
    cj["config_hash"] = hash;
    cj["seed"] = spec.seed;
    cj["language"] = cfg.language;
    write_text_file(spec.out_dir / ("selection_" + cfg.language + ".json"),
                    cj.dump(2) + "\n");

    optimal_sets[cfg.language] = std::set<std::string>(
        curve.optimal_set.begin(), curve.optimal_set.end());
    tables.push_back(std::move(ex.table));
  }

  // Assembly.
  CrossTable ct = assemble(tables, optimal_sets, spec.strategy);
  nlohmann::json ctj = cross_table_to_json(ct);
  ctj["config_hash"] = hash;
  ctj["seed"] = spec.seed;
  write_text_file(spec.out_dir / "cross_table.json", ctj.dump(2) + "\n");

  // Optional grid search over boosting rounds (global, LOSO accuracy).
  TrainMatrix m = to_matrix(ct);
  if (!spec.rounds_grid.empty()) {
    train = grid_search(m, spec.rounds_grid, train,
                        [](const TrainMatrix& gm, const TrainConfig& gc) {
                          return evaluate_loso(gm, gc).accuracy;
                        });
  }

  nlohmann::json meta = {{"config_hash", hash},
                         {"seed", spec.seed},
                         {"strategy", to_string(spec.strategy)},
                         {"fraction", spec.fraction},
                         {"subsample_language", spec.subsample_lang},
                         {"rounds_grid", spec.rounds_grid},
                         {"train", train_config_to_json(train)}};
  write_text_file(spec.out_dir / "run_meta.json", meta.dump(2) + "\n");

  // Final model over the full cross table, then the report from artifacts.
  Ensemble model = dysev::train(m, train);
  nlohmann::json mj = ensemble_to_json(model);
  mj["config_hash"] = hash;
  mj["seed"] = spec.seed;
  write_text_file(spec.out_dir / "model.json", mj.dump(2) + "\n");

  build_report(spec.out_dir);
  ExperimentResult res;
  res.config_hash = hash;
  res.table = std::move(ct);
  res.final_train = train;

  std::vector<std::string> languages;
  for (const CrossRow& r : res.table.rows) languages.push_back(r.language);
  res.report = evaluate_loso(to_matrix(res.table), train, languages);
  return res;
}

// Dataset-size sweep for one language: one full experiment per fraction,
// each in its own subdirectory, plus a summary file.
inline nlohmann::json run_sweep(const ExperimentSpec& base,
                                const std::string& language,
                                const std::vector<double>& fractions) {
  if (fractions.empty()) throw config_error("sweep needs at least 1 fraction");
  nlohmann::json results = nlohmann::json::array();
  for (double f : fractions) {
    char tag[32];
    std::snprintf(tag, sizeof tag, "%g", f);
    ExperimentSpec spec = base;
    spec.fraction = f;
    spec.subsample_lang = language;
    spec.out_dir = base.out_dir / (std::string("fraction_") + tag);
    ExperimentResult r = run_experiment(spec);
    nlohmann::json entry = {{"fraction", f},
                            {"macro_f1", r.report.macro_f1},
                            {"accuracy", r.report.accuracy}};
    if (r.report.average_language_macro_f1) {
      entry["per_language_macro_f1"] = r.report.per_language_macro_f1;
      entry["average_language_macro_f1"] =
          *r.report.average_language_macro_f1;
    }
    results.push_back(std::move(entry));
  }
  nlohmann::json summary = {{"language", language},
                            {"fractions", fractions},
                            {"results", std::move(results)}};
  write_text_file(base.out_dir / "sweep.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace dysev
