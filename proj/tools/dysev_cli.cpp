// dysev: batch front-end for the extraction / selection / assembly /
// evaluation pipeline. Subcommands mirror the pipeline stages so each
// artifact can also be produced (and re-produced) on its own.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dysev/dysev.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct TrainFlags {
  int rounds = 100;
  int depth = 3;
  double learning_rate = 0.3;
  double lambda = 1.0;
  double gamma = 0.0;
  double min_child_weight = 1.0;
  std::uint64_t seed = 0;

  void attach(CLI::App* cmd) {
    cmd->add_option("--rounds", rounds, "Boosting rounds");
    cmd->add_option("--depth", depth, "Maximum tree depth");
    cmd->add_option("--learning-rate", learning_rate, "Shrinkage per tree");
    cmd->add_option("--lambda", lambda, "L2 regularization on leaf weights");
    cmd->add_option("--gamma", gamma, "Minimum gain to keep a split");
    cmd->add_option("--min-child-weight", min_child_weight,
                    "Minimum hessian sum per child");
    cmd->add_option("--seed", seed, "Random seed");
  }

  dysev::TrainConfig config() const {
    dysev::TrainConfig c;
    c.rounds = rounds;
    c.max_depth = depth;
    c.learning_rate = learning_rate;
    c.lambda = lambda;
    c.gamma = gamma;
    c.min_child_weight = min_child_weight;
    c.seed = seed;
    return c;
  }
};

// "100:1000:100" (start:stop:step, inclusive) or "100,200,300".
std::vector<int> parse_rounds_grid(const std::string& text) {
  std::vector<int> out;
  if (text.find(':') != std::string::npos) {
    int start = 0, stop = 0, step = 0;
    if (std::sscanf(text.c_str(), "%d:%d:%d", &start, &stop, &step) != 3 ||
        step <= 0 || start <= 0 || stop < start)
      throw dysev::config_error("bad --rounds-grid '" + text +
                                "', expected start:stop:step");
    for (int r = start; r <= stop; r += step) out.push_back(r);
    return out;
  }
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stoi(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty())
    throw dysev::config_error("bad --rounds-grid '" + text + "'");
  return out;
}

std::vector<double> parse_fractions(const std::string& text) {
  std::vector<double> out;
  std::string cur;
  for (char c : text + ",") {
    if (c == ',') {
      if (!cur.empty()) out.push_back(std::stod(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (out.empty()) throw dysev::config_error("no fractions given");
  return out;
}

std::string stamp_line(const std::string& hash, std::uint64_t seed) {
  return "# config_hash=" + hash + " seed=" + std::to_string(seed) + "\n";
}

dysev::ExperimentSpec::LanguageInput make_input(const std::string& manifest,
                                                const std::string& config) {
  return {fs::path(manifest), fs::path(config)};
}

int cmd_extract(const std::string& manifest, const std::string& config,
                const std::string& out_dir, std::uint64_t seed) {
  const dysev::LanguageConfig cfg = dysev::load_language_config(config);
  dysev::ExtractionResult res = dysev::extract_language(manifest, cfg);
  const std::string hash = dysev::fingerprint(
      {json{{"stage", "extract"}, {"seed", seed}}.dump(),
       dysev::read_text_file(config), dysev::read_text_file(manifest)});
  const fs::path dir(out_dir);
  dysev::write_text_file(dir / ("features_" + cfg.language + ".csv"),
                         stamp_line(hash, seed) +
                             dysev::feature_table_to_csv(res.table));
  dysev::write_text_file(
      dir / ("missing_reasons_" + cfg.language + ".json"),
      dysev::reasons_to_json(res, hash, seed).dump(2) + "\n");
  std::cout << "extracted " << res.table.rows.size() << " utterances ("
            << cfg.language << ") -> " << out_dir << "\n";
  return 0;
}

int cmd_select(const std::string& features, const std::string& out_dir,
               const TrainFlags& flags) {
  const std::string csv = dysev::read_text_file(features);
  dysev::FeatureTable t = dysev::feature_table_from_csv(csv);
  dysev::TrainConfig train = flags.config();
  dysev::SelectionCurve curve = dysev::select_features(t, train);
  const std::string hash = dysev::fingerprint(
      {json{{"stage", "select"}, {"train", dysev::train_config_to_json(train)}}
           .dump(),
       csv});
  json cj = dysev::selection_curve_to_json(curve);
  cj["config_hash"] = hash;
  cj["seed"] = flags.seed;
  cj["language"] = t.language;
  dysev::write_text_file(
      fs::path(out_dir) / ("selection_" + t.language + ".json"),
      cj.dump(2) + "\n");
  std::cout << "selected " << curve.optimal_set.size() << " features ("
            << t.language << ") -> " << out_dir << "\n";
  return 0;
}

int cmd_assemble(const std::vector<std::string>& feature_files,
                 const std::vector<std::string>& selection_files,
                 const std::string& strategy_name, const std::string& out_dir,
                 std::uint64_t seed) {
  const dysev::Strategy strategy = dysev::strategy_from_string(strategy_name);
  std::vector<dysev::FeatureTable> tables;
  std::map<std::string, std::set<std::string>> sets;
  std::vector<std::string> parts = {
      json{{"stage", "assemble"}, {"strategy", strategy_name}, {"seed", seed}}
          .dump()};
  for (const std::string& f : feature_files) {
    const std::string csv = dysev::read_text_file(f);
    parts.push_back(csv);
    tables.push_back(dysev::feature_table_from_csv(csv));
  }
  for (const std::string& s : selection_files) {
    const std::string text = dysev::read_text_file(s);
    parts.push_back(text);
    const json j = json::parse(text);
    dysev::SelectionCurve curve = dysev::selection_curve_from_json(j);
    sets[j.at("language").get<std::string>()] = std::set<std::string>(
        curve.optimal_set.begin(), curve.optimal_set.end());
  }
  dysev::CrossTable ct = dysev::assemble(tables, sets, strategy);
  json cj = dysev::cross_table_to_json(ct);
  cj["config_hash"] = dysev::fingerprint(parts);
  cj["seed"] = seed;
  dysev::write_text_file(fs::path(out_dir) / "cross_table.json",
                         cj.dump(2) + "\n");
  std::cout << "assembled " << ct.rows.size() << " rows x "
            << ct.columns.size() << " columns (" << strategy_name << ") -> "
            << out_dir << "\n";
  return 0;
}

int cmd_evaluate(const std::string& table_file, const std::string& out_dir,
                 const TrainFlags& flags, const std::string& rounds_grid) {
  const std::string table_text = dysev::read_text_file(table_file);
  const json tj = json::parse(table_text);
  dysev::CrossTable ct = dysev::cross_table_from_json(tj);
  dysev::TrainMatrix m = dysev::to_matrix(ct);

  dysev::TrainConfig train = flags.config();
  std::vector<int> grid;
  if (!rounds_grid.empty()) {
    grid = parse_rounds_grid(rounds_grid);
    train = dysev::grid_search(
        m, grid, train,
        [](const dysev::TrainMatrix& gm, const dysev::TrainConfig& gc) {
          return dysev::evaluate_loso(gm, gc).accuracy;
        });
  }

  const std::string hash = dysev::fingerprint(
      {json{{"stage", "evaluate"},
            {"train", dysev::train_config_to_json(train)},
            {"rounds_grid", grid}}
           .dump(),
       table_text});
  const fs::path dir(out_dir);
  fs::create_directories(dir);
  if (!fs::exists(dir / "cross_table.json") ||
      !fs::equivalent(fs::path(table_file), dir / "cross_table.json"))
    dysev::write_text_file(dir / "cross_table.json", table_text);

  json meta = {{"config_hash", hash},
               {"seed", flags.seed},
               {"strategy", dysev::to_string(ct.strategy)},
               {"fraction", 1.0},
               {"subsample_language", ""},
               {"rounds_grid", grid},
               {"train", dysev::train_config_to_json(train)}};
  dysev::write_text_file(dir / "run_meta.json", meta.dump(2) + "\n");

  dysev::Ensemble model = dysev::train(m, train);
  json mj = dysev::ensemble_to_json(model);
  mj["config_hash"] = hash;
  mj["seed"] = flags.seed;
  dysev::write_text_file(dir / "model.json", mj.dump(2) + "\n");

  json report = dysev::build_report(dir);
  std::cout << "macro_f1 " << report.at("macro_f1").get<double>()
            << "  accuracy " << report.at("accuracy").get<double>() << "  -> "
            << out_dir << "\n";
  return 0;
}

int cmd_run(const std::vector<std::string>& manifests,
            const std::vector<std::string>& configs,
            const std::string& strategy_name, double fraction,
            const std::string& subsample_lang, const std::string& out_dir,
            const TrainFlags& flags, const std::string& rounds_grid) {
  dysev::ExperimentSpec spec;
  for (std::size_t i = 0; i < manifests.size(); ++i)
    spec.inputs.push_back(make_input(manifests[i], configs[i]));
  spec.strategy = dysev::strategy_from_string(strategy_name);
  spec.fraction = fraction;
  spec.subsample_lang = subsample_lang;
  spec.train = flags.config();
  if (!rounds_grid.empty()) spec.rounds_grid = parse_rounds_grid(rounds_grid);
  spec.seed = flags.seed;
  spec.out_dir = out_dir;
  dysev::ExperimentResult res = dysev::run_experiment(spec);
  std::cout << "macro_f1 " << res.report.macro_f1 << "  accuracy "
            << res.report.accuracy << "  hash " << res.config_hash << "  -> "
            << out_dir << "\n";
  return 0;
}

int cmd_sweep(const std::vector<std::string>& manifests,
              const std::vector<std::string>& configs,
              const std::string& strategy_name, const std::string& language,
              const std::string& fractions_text, const std::string& out_dir,
              const TrainFlags& flags, const std::string& rounds_grid) {
  dysev::ExperimentSpec base;
  for (std::size_t i = 0; i < manifests.size(); ++i)
    base.inputs.push_back(make_input(manifests[i], configs[i]));
  base.strategy = dysev::strategy_from_string(strategy_name);
  base.train = flags.config();
  if (!rounds_grid.empty()) base.rounds_grid = parse_rounds_grid(rounds_grid);
  base.seed = flags.seed;
  base.out_dir = out_dir;
  json summary =
      dysev::run_sweep(base, language, parse_fractions(fractions_text));
  std::cout << "sweep over " << summary.at("fractions").size()
            << " fractions -> " << out_dir << "/sweep.json\n";
  return 0;
}

int cmd_report(const std::string& in_dir) {
  json report = dysev::build_report(in_dir);
  std::cout << report.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-lingual dysarthria severity pipeline"};
  app.require_subcommand(1);

  std::vector<std::string> manifests, configs, feature_files, selection_files;
  std::string manifest, config, features, table_file, out_dir, in_dir;
  std::string strategy = "proposed", language, fractions, rounds_grid;
  double fraction = 1.0;
  std::string subsample_lang;
  TrainFlags flags;

  CLI::App* extract = app.add_subcommand(
      "extract", "Extract the feature table for one language");
  extract->add_option("--manifest", manifest, "JSON-lines corpus manifest")
      ->required();
  extract->add_option("--config", config, "Language config JSON")->required();
  extract->add_option("--out", out_dir, "Output directory")->required();
  extract->add_option("--seed", flags.seed, "Seed stamped into artifacts");

  CLI::App* select =
      app.add_subcommand("select", "Run feature elimination on one table");
  select->add_option("--features", features, "Feature table CSV")->required();
  select->add_option("--out", out_dir, "Output directory")->required();
  flags.attach(select);

  CLI::App* assemble = app.add_subcommand(
      "assemble", "Build the cross-lingual table from per-language artifacts");
  assemble->add_option("--features", feature_files, "Feature table CSVs")
      ->required();
  assemble->add_option("--selection", selection_files, "Selection curve JSONs")
      ->required();
  assemble
      ->add_option("--strategy", strategy,
                   "intersection | union | proposed")
      ->required();
  assemble->add_option("--out", out_dir, "Output directory")->required();
  assemble->add_option("--seed", flags.seed, "Seed stamped into artifacts");

  CLI::App* evaluate =
      app.add_subcommand("evaluate", "LOSO-evaluate an assembled table");
  evaluate->add_option("--table", table_file, "cross_table.json")->required();
  evaluate->add_option("--out", out_dir, "Output directory")->required();
  evaluate->add_option("--rounds-grid", rounds_grid,
                       "start:stop:step or comma list of boosting rounds");
  flags.attach(evaluate);

  CLI::App* run =
      app.add_subcommand("run", "Full pipeline: extract through report");
  run->add_option("--manifest", manifests, "One manifest per language")
      ->required();
  run->add_option("--config", configs, "One config per language")->required();
  run->add_option("--strategy", strategy, "intersection | union | proposed");
  run->add_option("--fraction", fraction, "Sentence fraction to keep");
  run->add_option("--subsample-language", subsample_lang,
                  "Language the fraction applies to");
  run->add_option("--rounds-grid", rounds_grid,
                  "start:stop:step or comma list of boosting rounds");
  run->add_option("--out", out_dir, "Output directory")->required();
  flags.attach(run);

  CLI::App* sweep = app.add_subcommand(
      "sweep", "Full pipeline once per dataset fraction");
  sweep->add_option("--manifest", manifests, "One manifest per language")
      ->required();
  sweep->add_option("--config", configs, "One config per language")
      ->required();
  sweep->add_option("--strategy", strategy, "intersection | union | proposed");
  sweep->add_option("--language", language, "Language to subsample")
      ->required();
  sweep->add_option("--fractions", fractions, "Comma list, e.g. 0.2,0.4,1.0")
      ->required();
  sweep->add_option("--rounds-grid", rounds_grid,
                    "start:stop:step or comma list of boosting rounds");
  sweep->add_option("--out", out_dir, "Output directory")->required();
  flags.attach(sweep);

  CLI::App* report =
      app.add_subcommand("report", "Regenerate report.json from artifacts");
  report->add_option("--in", in_dir, "Directory with run artifacts")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (extract->parsed())
      return cmd_extract(manifest, config, out_dir, flags.seed);
    if (select->parsed()) return cmd_select(features, out_dir, flags);
    if (assemble->parsed())
      return cmd_assemble(feature_files, selection_files, strategy, out_dir,
                          flags.seed);
    if (evaluate->parsed())
      return cmd_evaluate(table_file, out_dir, flags, rounds_grid);
    if (run->parsed()) {
      if (manifests.size() != configs.size()) {
        std::cerr << "error: need one --config per --manifest\n";
        return 1;
      }
      return cmd_run(manifests, configs, strategy, fraction, subsample_lang,
                     out_dir, flags, rounds_grid);
    }
    if (sweep->parsed()) {
      if (manifests.size() != configs.size()) {
        std::cerr << "error: need one --config per --manifest\n";
        return 1;
      }
      return cmd_sweep(manifests, configs, strategy, language, fractions,
                       out_dir, flags, rounds_grid);
    }
    if (report->parsed()) return cmd_report(in_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
