/*
 * Copyright 2026 The Flowgate Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

// Command-line front end. Each subcommand wraps one pipeline stage; `run`
// drives the whole pipeline from a JSON configuration.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "flowgate/dataset.h"
#include "flowgate/experiment.h"
#include "flowgate/explain.h"
#include "flowgate/featsel.h"
#include "flowgate/leakage_guard.h"
#include "flowgate/metrics.h"
#include "flowgate/model.h"
#include "flowgate/sampler.h"
#include "flowgate/splitter.h"
#include "flowgate/synth.h"
#include "json.hpp"

namespace fs = std::filesystem;
using namespace flowgate;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  std::string output_dir = ".";
};

struct InputArgs {
  std::string path;
  std::string label = "Label";
  std::string timestamp;
  std::string non_finite = "drop";
  bool rename_duplicates = false;
  bool keep_spaces = false;
  std::vector<std::string> ignore;
  // Optional split index file and which part of it to use.
  std::string indices;
  std::string part;

  void add_to(CLI::App* app, const std::string& default_part) {
    part = default_part;
    app->add_option("-i,--input", path, "Flow CSV file, or a directory of them")
        ->required()
        ->check(CLI::ExistingPath);
    app->add_option("--label", label, "Label column")->capture_default_str();
    app->add_option("--timestamp", timestamp, "Timestamp column");
    app->add_option("--non-finite", non_finite, "NaN/Inf handling: drop or replace")
        ->check(CLI::IsMember({"drop", "replace"}))
        ->capture_default_str();
    app->add_flag("--rename-duplicates", rename_duplicates,
                  "Suffix repeated header names instead of failing");
    app->add_flag("--keep-spaces", keep_spaces, "Only trim header names");
    app->add_option("--ignore", ignore, "Columns to drop (identifiers, addresses)");
    if (!default_part.empty()) {
      app->add_option("--indices", indices, "Split index file written by `split`")
          ->check(CLI::ExistingFile);
      app->add_option("--part", part, "Partition of the index file to use")
          ->check(CLI::IsMember({"train", "validation", "test"}))
          ->capture_default_str();
    }
  }

  Dataset load(const std::vector<std::string>& class_order = {}) const {
    ingest::IngestOptions o;
    o.non_finite = non_finite == "replace" ? ingest::NonFinitePolicy::kReplaceWithExtremum
                                           : ingest::NonFinitePolicy::kDropRow;
    o.rename_duplicate_headers = rename_duplicates;
    o.collapse_whitespace = !keep_spaces;
    o.ignore_columns = ignore;
    o.class_order = class_order;
    std::optional<std::string> ts;
    if (!timestamp.empty()) ts = timestamp;
    ingest::IngestStats stats;
    Dataset d = ingest::load_csv(path, label, ts, o, &stats);
    if (stats.rows_dropped > 0 || stats.cells_replaced > 0) {
      std::cerr << "ingest: " << stats.rows_read << " rows read, " << stats.rows_dropped
                << " dropped, " << stats.cells_replaced << " cells replaced\n";
    }
    if (indices.empty()) return d;
    std::ifstream in(indices);
    nlohmann::json j;
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw Error(indices + ": " + e.what());
    }
    const auto rows = j.at(part).get<std::vector<std::size_t>>();
    for (std::size_t r : rows) {
      if (r >= d.rows()) throw Error(indices + ": row index out of range for this input");
    }
    return d.subset(rows);
  }
};

std::string out_path(const Globals& g, const std::string& name) {
  fs::create_directories(g.output_dir);
  return (fs::path(g.output_dir) / name).string();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << text;
  if (!out) throw Error("write failed: " + path);
  std::cerr << "wrote " << path << "\n";
}

void write_json(const std::string& path, const nlohmann::json& j) {
  write_text(path, j.dump(2) + "\n");
}

nlohmann::json with_schema(nlohmann::json j, const char* kind) {
  j["schema"] = std::string("flowgate-") + kind + "/1";
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"flowgate: leakage-aware intrusion-detection experiments"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_option("--output-dir", g.output_dir, "Directory for output files")
      ->capture_default_str();

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic flow dataset");
  std::string synth_spec_path, synth_out = "synthetic.csv", synth_profile;
  synth::SynthSpec synth_spec;
  synth_cmd->add_option("--spec", synth_spec_path, "JSON generator spec")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--rows", synth_spec.rows)->capture_default_str();
  synth_cmd->add_option("--classes", synth_spec.classes)->capture_default_str();
  synth_cmd->add_option("--features", synth_spec.features)->capture_default_str();
  synth_cmd->add_option("--separation", synth_spec.separation)->capture_default_str();
  synth_cmd->add_flag("--nonlinear", synth_spec.nonlinear);
  synth_cmd->add_flag("--timestamps", synth_spec.timestamps);
  synth_cmd->add_option("--label-copies", synth_spec.leaks.label_copies);
  synth_cmd->add_option("--noisy-proxies", synth_spec.leaks.noisy_proxies);
  synth_cmd->add_option("--constants", synth_spec.leaks.constants);
  synth_cmd->add_option("--profile", synth_profile, "cic-ids2017: six classes, CIC-IDS2017 sample weights")
      ->check(CLI::IsMember({"cic-ids2017"}));
  synth_cmd->add_option("-o,--out", synth_out, "Output CSV name")->capture_default_str();

  // sample
  auto* sample_cmd = app.add_subcommand("sample", "Stratified sample with validation");
  InputArgs sample_in;
  sample_in.add_to(sample_cmd, "");
  sampler::SamplePlan sample_plan;
  sample_cmd->add_option("--fraction", sample_plan.fraction)->capture_default_str();
  sample_cmd->add_option("--min-per-class", sample_plan.min_per_class)->capture_default_str();

  // audit
  auto* audit_cmd = app.add_subcommand("audit", "Leakage audit (give training rows only)");
  InputArgs audit_in;
  audit_in.add_to(audit_cmd, "train");
  leakage::AuditThresholds thresholds;
  bool audit_write_clean = false;
  audit_cmd->add_option("--correlation", thresholds.target_correlation)->capture_default_str();
  audit_cmd->add_option("--auc", thresholds.single_feature_auc)->capture_default_str();
  audit_cmd->add_option("--near-constant", thresholds.near_constant_frequency)
      ->capture_default_str();
  audit_cmd->add_flag("--near-constant-removes", thresholds.near_constant_removes);
  audit_cmd->add_flag("--write-clean", audit_write_clean, "Also write the cleaned CSV");

  // split
  auto* split_cmd = app.add_subcommand("split", "Partition rows into train/validation/test");
  InputArgs split_in;
  split_in.add_to(split_cmd, "");
  std::vector<std::string> split_plans;
  std::string split_mode = "stratified";
  split_cmd->add_option("--plan", split_plans, "40-10-50, 60-10-30, 80-10-10 or a-b-c")
      ->required();
  split_cmd->add_option("--mode", split_mode)
      ->check(CLI::IsMember({"stratified", "temporal"}))
      ->capture_default_str();

  // select
  auto* select_cmd = app.add_subcommand("select", "MRMR or Chi2 feature selection");
  InputArgs select_in;
  select_in.add_to(select_cmd, "train");
  std::string select_method = "mrmr";
  double select_fraction = 0.7;
  featsel::DiscretizationPlan select_bins;
  select_cmd->add_option("--method", select_method)
      ->check(CLI::IsMember({"mrmr", "chi2"}))
      ->capture_default_str();
  select_cmd->add_option("--fraction", select_fraction)->capture_default_str();
  select_cmd->add_option("--bins", select_bins.bins_per_feature)->capture_default_str();

  // train
  auto* train_cmd = app.add_subcommand("train", "Fit standardizer and model");
  InputArgs train_in;
  train_in.add_to(train_cmd, "train");
  std::string train_algorithm = "gbdt", train_params, train_out = "model.json";
  std::vector<std::string> train_features;
  train_cmd->add_option("--algorithm", train_algorithm, "gbdt, random_forest or logistic")
      ->capture_default_str();
  train_cmd->add_option("--params", train_params, "Hyperparameters as a JSON object");
  train_cmd->add_option("--features", train_features, "Restrict to these features");
  train_cmd->add_option("-o,--out", train_out)->capture_default_str();

  // evaluate
  auto* eval_cmd = app.add_subcommand("evaluate", "Score a trained model");
  InputArgs eval_in;
  eval_in.add_to(eval_cmd, "test");
  std::string eval_model;
  int eval_reps = 5;
  eval_cmd->add_option("-m,--model", eval_model)->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--repetitions", eval_reps, "Throughput repetitions")
      ->capture_default_str();

  // explain
  auto* explain_cmd = app.add_subcommand("explain", "SHAP values and importance summaries");
  InputArgs explain_in;
  explain_in.add_to(explain_cmd, "test");
  std::string explain_model;
  std::size_t explain_rows = 200, explain_top = 10;
  explain_cmd->add_option("-m,--model", explain_model)->required()->check(CLI::ExistingFile);
  explain_cmd->add_option("--rows", explain_rows, "Rows to explain")->capture_default_str();
  explain_cmd->add_option("--top-k", explain_top)->capture_default_str();

  // run
  auto* run_cmd = app.add_subcommand("run", "Full pipeline from a JSON configuration");
  std::string run_config, run_format = "both";
  bool run_no_timing = false;
  run_cmd->add_option("-c,--config", run_config)->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--format", run_format)
      ->check(CLI::IsMember({"json", "markdown", "both"}))
      ->capture_default_str();
  run_cmd->add_flag("--no-timing", run_no_timing, "Omit wall-clock fields from the report");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth_cmd->parsed()) {
      if (!synth_spec_path.empty()) {
        std::ifstream in(synth_spec_path);
        nlohmann::json j;
        in >> j;
        synth_spec = synth::SynthSpec::from_json(j);
      }
      if (synth_profile == "cic-ids2017") {
        synth_spec.classes = 6;
        synth_spec.class_weights = synth::cic_ids2017_weights();
        synth_spec.class_names = synth::cic_ids2017_class_names();
      }
      if (synth_spec_path.empty()) synth_spec.seed = g.seed;
      const Dataset d = synth::generate_synthetic(synth_spec);
      const auto path = out_path(g, synth_out);
      ingest::save_csv(path, d);
      std::cerr << "wrote " << path << " (" << d.rows() << " rows)\n";
    } else if (sample_cmd->parsed()) {
      const Dataset d = sample_in.load();
      sample_plan.seed = g.seed;
      const auto result = sampler::stratified_sample(d, sample_plan);
      const auto v = sampler::validate_sample(d, result.sample);
      ingest::save_csv(out_path(g, "sample.csv"), result.sample, sample_in.label,
                       sample_in.timestamp.empty() ? "Timestamp" : sample_in.timestamp);
      write_json(out_path(g, "sample_indices.json"),
                 with_schema({{"rows", result.indices}}, "indices"));
      write_json(out_path(g, "sample_validation.json"),
                 with_schema(experiment::to_json(v, d, result.sample), "sample-validation"));
    } else if (audit_cmd->parsed()) {
      const Dataset d = audit_in.load();
      const auto report = leakage::audit_features(d, thresholds, g.threads);
      write_json(out_path(g, "leakage_report.json"),
                 with_schema(experiment::to_json(report), "leakage"));
      for (const auto& f : report.removed_features) std::cout << f << "\n";
      if (audit_write_clean) {
        ingest::save_csv(out_path(g, "clean.csv"), leakage::apply_removals(d, report),
                         audit_in.label);
      }
    } else if (split_cmd->parsed()) {
      const Dataset d = split_in.load();
      const auto mode = splitter::parse_split_mode(split_mode);
      for (std::size_t i = 0; i < split_plans.size(); ++i) {
        const auto plan = splitter::parse_plan(split_plans[i], mode, derive_seed(g.seed, 100 + i));
        const auto s = splitter::split(d, plan);
        const auto overlap = splitter::verify_no_overlap(d, s);
        nlohmann::json j = experiment::to_json(s, plan);
        j["train"] = s.train;
        j["validation"] = s.validation;
        j["test"] = s.test;
        nlohmann::json dups = nlohmann::json::array();
        for (const auto& f : overlap.content_duplicates) {
          dups.push_back({{"first", splitter::to_string(f.first)},
                          {"second", splitter::to_string(f.second)},
                          {"pair_count", f.pair_count},
                          {"distinct_rows", f.distinct_rows}});
        }
        j["content_duplicates"] = std::move(dups);
        for (const auto& w : s.warnings) std::cerr << "warning: " << w << "\n";
        write_json(out_path(g, "split_" + plan.name + ".json"), with_schema(j, "split"));
      }
    } else if (select_cmd->parsed()) {
      Dataset d = select_in.load();
      const auto method = featsel::parse_method(select_method);
      if (method == featsel::Method::kMrmr) {
        d.features = preprocess::Standardizer::fit(d.features).transform(d.features);
      }
      const auto result = featsel::select(method, d, select_fraction, select_bins);
      write_json(out_path(g, "selection.json"),
                 with_schema(experiment::to_json(result), "selection"));
      for (const auto& f : result.retained) std::cout << f << "\n";
    } else if (train_cmd->parsed()) {
      Dataset d = train_in.load();
      if (!train_features.empty()) {
        std::vector<std::size_t> cols;
        for (const auto& f : train_features) {
          const auto idx = d.feature_index(f);
          if (!idx) throw Error("unknown feature '" + f + "'");
          cols.push_back(*idx);
        }
        d = d.select_features(cols);
      }
      nlohmann::json pj = nlohmann::json::object();
      if (!train_params.empty()) {
        try {
          pj = nlohmann::json::parse(train_params);
        } catch (const nlohmann::json::exception& e) {
          throw Error(std::string("--params: ") + e.what());
        }
      }
      pj["family"] = train_algorithm;
      auto spec = models::ModelSpec::from_json(pj);
      spec.threads = g.threads;
      double seconds = 0.0;
      const auto pipeline = experiment::fit_pipeline(d, spec, g.seed, &seconds);
      pipeline.save(out_path(g, train_out));
      std::cerr << "trained " << models::to_string(spec.family) << " in " << seconds << " s\n";
    } else if (eval_cmd->parsed()) {
      const auto pipeline = experiment::FittedPipeline::load(eval_model);
      const Dataset d = eval_in.load(pipeline.class_names);
      const auto truth = pipeline.map_labels(d);
      const Matrix x = pipeline.prepare(d);
      auto bundle = metrics::evaluate(truth, pipeline.model.predict_proba(x), pipeline.class_names);
      bundle.predictions_per_s =
          models::measure_throughput(pipeline.model, x, eval_reps).predictions_per_second;
      write_json(out_path(g, "metrics.json"), with_schema(bundle.to_json(), "metrics"));
      std::cout << "accuracy " << bundle.accuracy << "\nf1_macro " << bundle.f1_macro
                << "\nroc_auc_macro " << bundle.roc_auc_macro << "\n";
    } else if (explain_cmd->parsed()) {
      const auto pipeline = experiment::FittedPipeline::load(explain_model);
      const Dataset d = explain_in.load(pipeline.class_names);
      const Matrix all = pipeline.prepare(d);
      std::vector<std::size_t> rows(std::min(explain_rows, all.rows()));
      for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
      const Matrix x = all.select_rows(rows);
      // Standardized training features have zero mean.
      const std::vector<double> background(x.cols(), 0.0);
      const auto e = explain::explain_model(pipeline.model, x, background, g.threads);
      std::ofstream csv(out_path(g, "shap_values.csv"));
      if (!csv) throw Error("cannot write shap_values.csv");
      explain::write_shap_csv(csv, e, pipeline.feature_names, pipeline.class_names);
      auto summary =
          explain::aggregate_importance(e, pipeline.feature_names, pipeline.class_names);
      nlohmann::json j = {{"rows_explained", rows.size()}, {"base_values", e.base_values}};
      if (pipeline.model.family() != models::Family::kLogistic) {
        const auto gini = std::visit(
            [](const auto& m) -> explain::GiniImportance {
              using T = std::decay_t<decltype(m)>;
              if constexpr (std::is_same_v<T, models::LogisticModel>) {
                return {};
              } else {
                return explain::gini_importance(m);
              }
            },
            pipeline.model.variant());
        summary.gini = gini.values;
        summary.gini_no_splits = gini.no_splits;
        j["comparison"] = explain::compare_importance(summary.global, summary.gini,
                                                      summary.feature_names, explain_top)
                              .to_json();
      }
      j["summary"] = summary.to_json();
      write_json(out_path(g, "importance.json"), with_schema(j, "importance"));
    } else if (run_cmd->parsed()) {
      auto config = experiment::ExperimentConfig::load(run_config);
      // Command-line seed and threads apply only when given explicitly.
      if (app.count("--seed") > 0) {
        auto j = config.to_json();
        j["seed"] = g.seed;
        config = experiment::ExperimentConfig::from_json(j);
      }
      if (app.count("--threads") > 0) {
        config.threads = g.threads;
        for (auto& a : config.algorithms) a.threads = g.threads;
      }
      experiment::RunArtifacts artifacts;
      const auto report = experiment::run_experiment(config, &artifacts);
      const bool timing = !run_no_timing;
      if (run_format != "markdown") {
        write_text(out_path(g, "report.json"),
                   experiment::emit_report(report, experiment::ReportFormat::kJson, timing));
      }
      if (run_format != "json") {
        write_text(out_path(g, "report.md"),
                   experiment::emit_report(report, experiment::ReportFormat::kMarkdown, timing));
      }
      if (artifacts.final_pipeline) artifacts.final_pipeline->save(out_path(g, "model.json"));
      if (!artifacts.shap_csv.empty()) write_text(out_path(g, "shap_values.csv"), artifacts.shap_csv);
      for (const auto& e : report.errors) std::cerr << "cell error: " << e << "\n";
    }
  } catch (const Error& e) {
    std::cerr << "flowgate: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "flowgate: " << e.what() << "\n";
    return 2;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "flowgate: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
