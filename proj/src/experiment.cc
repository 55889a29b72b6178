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

#include "flowgate/experiment.h"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "flowgate/explain.h"

namespace flowgate::experiment {
namespace {

void reject_unknown_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
  if (!j.is_object()) throw Error(where + ": expected a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!allowed.count(key)) throw Error(where + ": unknown key '" + key + "'");
  }
}

std::string percent_label(double fraction) {
  return std::to_string(static_cast<long long>(std::llround(fraction * 100.0)));
}

// Column means, used as the linear SHAP background.
std::vector<double> column_means(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(r, j);
  }
  for (double& v : mean) v /= static_cast<double>(std::max<std::size_t>(x.rows(), 1));
  return mean;
}

const std::vector<std::string>& decisions_in_effect() {
  static const std::vector<std::string> kDecisions = {
      "leakage audit runs after sampling, on the train rows of each configuration",
      "standardizer and feature selectors see train rows only",
      "MRMR runs on standardized train data; Chi2 on discretized raw train data",
      "retention counts use floor(fraction * features), at least 1",
      "cross-validation runs on the train partition with a per-fold standardizer",
      "confidence intervals use the exact Student-t quantile",
      "GBDT min child weight applies to the hessian sum; base score is the log class prior",
      "SHAP attributions are on the margin scale (forest: averaged class distribution)",
      "best variant ties go to fewer features, then listing order",
  };
  return kDecisions;
}

}  // namespace

std::string VariantConfig::name() const {
  return std::string(featsel::to_string(method)) + "_" + percent_label(fraction);
}

void ExperimentConfig::validate() const {
  if (input.has_value() == synthetic.has_value()) {
    throw Error("config: exactly one of 'input' and 'synthetic' must be given");
  }
  if (input && input->path.empty()) throw Error("config: input.path is empty");
  if (synthetic) synthetic->validate();
  if (sample && !(sample->fraction > 0.0 && sample->fraction <= 1.0)) {
    throw Error("config: sample.fraction must be in (0, 1]");
  }
  if (splits.empty()) throw Error("config: at least one split plan is required");
  std::set<std::string> names;
  for (const auto& s : splits) {
    s.validate();
    if (!names.insert(s.name).second) throw Error("config: duplicate split name " + s.name);
  }
  if (algorithms.empty()) throw Error("config: at least one algorithm is required");
  std::set<std::string> families;
  for (const auto& a : algorithms) {
    if (!families.insert(models::to_string(a.family)).second) {
      throw Error(std::string("config: algorithm listed twice: ") + models::to_string(a.family));
    }
  }
  for (const auto& v : variants) {
    if (!(v.fraction > 0.0 && v.fraction <= 1.0)) {
      throw Error("config: selection fraction must be in (0, 1]");
    }
  }
  if (cv_folds != 0 && cv_folds < 2) throw Error("config: cv_folds must be 0 (off) or >= 2");
  if (threads < 1) throw Error("config: threads must be >= 1");
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (input) {
    nlohmann::json in = {{"path", input->path},
                         {"label_column", input->label_column},
                         {"non_finite", input->options.non_finite ==
                                                ingest::NonFinitePolicy::kDropRow
                                            ? "drop"
                                            : "replace"},
                         {"cells", input->options.cells == ingest::CellPolicy::kStrict
                                       ? "strict"
                                       : "nan"},
                         {"collapse_whitespace", input->options.collapse_whitespace},
                         {"rename_duplicate_headers", input->options.rename_duplicate_headers},
                         {"ignore_columns", input->options.ignore_columns},
                         {"class_order", input->options.class_order}};
    if (input->timestamp_column) in["timestamp_column"] = *input->timestamp_column;
    j["input"] = std::move(in);
  }
  if (synthetic) j["synthetic"] = synthetic->to_json();
  if (sample) {
    j["sample"] = {{"fraction", sample->fraction}, {"min_per_class", sample->min_per_class}};
  } else {
    j["sample"] = nullptr;
  }
  j["audit"] = {{"near_constant_frequency", audit.near_constant_frequency},
                {"near_constant_removes", audit.near_constant_removes},
                {"target_correlation", audit.target_correlation},
                {"single_feature_auc", audit.single_feature_auc},
                {"target_correlation_warn", audit.target_correlation_warn},
                {"single_feature_auc_warn", audit.single_feature_auc_warn}};
  nlohmann::json sp = nlohmann::json::array();
  for (const auto& s : splits) {
    sp.push_back({{"name", s.name},
                  {"fractions", {s.train_fraction, s.validation_fraction, s.test_fraction}},
                  {"mode", splitter::to_string(s.mode)}});
  }
  j["splits"] = std::move(sp);
  nlohmann::json vs = nlohmann::json::array();
  for (const auto& v : variants) {
    vs.push_back({{"method", featsel::to_string(v.method)}, {"fraction", v.fraction}});
  }
  j["selection"] = {{"variants", std::move(vs)},
                    {"bins", discretization.bins_per_feature},
                    {"strategy", featsel::to_string(discretization.strategy)}};
  nlohmann::json algs = nlohmann::json::array();
  for (const auto& a : algorithms) algs.push_back(a.to_json());
  j["algorithms"] = std::move(algs);
  j["metric"] = metrics::to_string(metric);
  j["cv_folds"] = cv_folds;
  j["explain_rows"] = explain_rows;
  j["top_k"] = top_k;
  j["throughput_repetitions"] = throughput_repetitions;
  j["seed"] = seed;
  j["threads"] = threads;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  reject_unknown_keys(j,
                      {"input", "synthetic", "sample", "audit", "splits", "selection",
                       "algorithms", "metric", "cv_folds", "explain_rows", "top_k",
                       "throughput_repetitions", "seed", "threads"},
                      "config");
  ExperimentConfig c;
  try {
    if (j.contains("input") && !j.at("input").is_null()) {
      const auto& in = j.at("input");
      reject_unknown_keys(in,
                          {"path", "label_column", "timestamp_column", "non_finite", "cells",
                           "collapse_whitespace", "rename_duplicate_headers",
                           "ignore_columns", "class_order", "alphabetical_classes"},
                          "config.input");
      InputConfig ic;
      ic.path = in.at("path").get<std::string>();
      ic.label_column = in.value("label_column", ic.label_column);
      if (in.contains("timestamp_column") && !in.at("timestamp_column").is_null()) {
        ic.timestamp_column = in.at("timestamp_column").get<std::string>();
      }
      const std::string nf = in.value("non_finite", std::string("drop"));
      if (nf == "drop") {
        ic.options.non_finite = ingest::NonFinitePolicy::kDropRow;
      } else if (nf == "replace") {
        ic.options.non_finite = ingest::NonFinitePolicy::kReplaceWithExtremum;
      } else {
        throw Error("config.input.non_finite must be 'drop' or 'replace'");
      }
      const std::string cells = in.value("cells", std::string("strict"));
      if (cells == "strict") {
        ic.options.cells = ingest::CellPolicy::kStrict;
      } else if (cells == "nan") {
        ic.options.cells = ingest::CellPolicy::kAsNaN;
      } else {
        throw Error("config.input.cells must be 'strict' or 'nan'");
      }
      ic.options.collapse_whitespace = in.value("collapse_whitespace", true);
      ic.options.rename_duplicate_headers = in.value("rename_duplicate_headers", false);
      ic.options.alphabetical_classes = in.value("alphabetical_classes", false);
      ic.options.ignore_columns = in.value("ignore_columns", std::vector<std::string>{});
      ic.options.class_order = in.value("class_order", std::vector<std::string>{});
      c.input = std::move(ic);
    }
    if (j.contains("synthetic") && !j.at("synthetic").is_null()) {
      c.synthetic = synth::SynthSpec::from_json(j.at("synthetic"));
    }
    c.seed = j.value("seed", std::uint64_t{0});
    if (j.contains("sample") && !j.at("sample").is_null()) {
      const auto& s = j.at("sample");
      reject_unknown_keys(s, {"fraction", "min_per_class"}, "config.sample");
      sampler::SamplePlan plan;
      plan.fraction = s.value("fraction", plan.fraction);
      plan.min_per_class = s.value("min_per_class", plan.min_per_class);
      plan.seed = derive_seed(c.seed, 1);
      c.sample = plan;
    }
    if (j.contains("audit")) {
      const auto& a = j.at("audit");
      reject_unknown_keys(a,
                          {"near_constant_frequency", "near_constant_removes",
                           "target_correlation", "single_feature_auc",
                           "target_correlation_warn", "single_feature_auc_warn"},
                          "config.audit");
      c.audit.near_constant_frequency =
          a.value("near_constant_frequency", c.audit.near_constant_frequency);
      c.audit.near_constant_removes =
          a.value("near_constant_removes", c.audit.near_constant_removes);
      c.audit.target_correlation = a.value("target_correlation", c.audit.target_correlation);
      c.audit.single_feature_auc = a.value("single_feature_auc", c.audit.single_feature_auc);
      c.audit.target_correlation_warn =
          a.value("target_correlation_warn", c.audit.target_correlation_warn);
      c.audit.single_feature_auc_warn =
          a.value("single_feature_auc_warn", c.audit.single_feature_auc_warn);
    }
    if (j.contains("splits")) {
      for (const auto& s : j.at("splits")) {
        if (s.is_string()) {
          c.splits.push_back(splitter::parse_plan(s.get<std::string>(),
                                                  splitter::SplitMode::kStratifiedRandom, 0));
          continue;
        }
        reject_unknown_keys(s, {"name", "fractions", "mode"}, "config.splits[]");
        const auto mode = splitter::parse_split_mode(s.value("mode", std::string("stratified")));
        splitter::SplitPlan plan;
        if (s.contains("fractions")) {
          const auto f = s.at("fractions").get<std::vector<double>>();
          if (f.size() != 3) throw Error("config.splits[].fractions needs 3 values");
          plan.train_fraction = f[0];
          plan.validation_fraction = f[1];
          plan.test_fraction = f[2];
          plan.mode = mode;
          plan.name = s.value("name", std::string());
          if (plan.name.empty()) {
            plan.name = percent_label(f[0]) + "-" + percent_label(f[1]) + "-" +
                        percent_label(f[2]);
          }
        } else {
          plan = splitter::parse_plan(s.at("name").get<std::string>(), mode, 0);
        }
        if (mode == splitter::SplitMode::kTemporal && plan.name.find("temporal") == std::string::npos) {
          plan.name += "-temporal";
        }
        c.splits.push_back(plan);
      }
    } else {
      c.splits = splitter::standard_configurations();
    }
    for (std::size_t i = 0; i < c.splits.size(); ++i) {
      c.splits[i].seed = derive_seed(c.seed, 100 + i);
    }
    if (j.contains("selection")) {
      const auto& s = j.at("selection");
      reject_unknown_keys(s, {"variants", "methods", "fractions", "bins", "strategy"},
                          "config.selection");
      if (s.contains("variants")) {
        for (const auto& v : s.at("variants")) {
          c.variants.push_back({featsel::parse_method(v.at("method").get<std::string>()),
                                v.at("fraction").get<double>()});
        }
      } else {
        const auto methods =
            s.value("methods", std::vector<std::string>{"mrmr", "chi2"});
        const auto fractions = s.value("fractions", std::vector<double>{0.7, 0.5, 0.3});
        for (const auto& m : methods) {
          for (double f : fractions) c.variants.push_back({featsel::parse_method(m), f});
        }
      }
      c.discretization.bins_per_feature = s.value("bins", c.discretization.bins_per_feature);
      const std::string strategy = s.value("strategy", std::string("equal-frequency"));
      if (strategy == "equal-frequency") {
        c.discretization.strategy = featsel::BinStrategy::kEqualFrequency;
      } else if (strategy == "equal-width") {
        c.discretization.strategy = featsel::BinStrategy::kEqualWidth;
      } else {
        throw Error("config.selection.strategy must be equal-frequency or equal-width");
      }
    } else {
      for (auto m : {featsel::Method::kMrmr, featsel::Method::kChi2}) {
        for (double f : {0.7, 0.5, 0.3}) c.variants.push_back({m, f});
      }
    }
    if (j.contains("algorithms")) {
      for (const auto& a : j.at("algorithms")) {
        c.algorithms.push_back(a.is_string() ? models::ModelSpec::from_json(
                                                   {{"family", a.get<std::string>()}})
                                             : models::ModelSpec::from_json(a));
      }
    } else {
      for (auto f : {models::Family::kGbdt, models::Family::kRandomForest,
                     models::Family::kLogistic}) {
        models::ModelSpec s;
        s.family = f;
        c.algorithms.push_back(s);
      }
    }
    c.metric = metrics::parse_metric(j.value("metric", std::string("f1_macro")));
    c.cv_folds = j.value("cv_folds", c.cv_folds);
    c.explain_rows = j.value("explain_rows", c.explain_rows);
    c.top_k = j.value("top_k", c.top_k);
    c.throughput_repetitions = j.value("throughput_repetitions", c.throughput_repetitions);
    c.threads = j.value("threads", c.threads);
    for (auto& a : c.algorithms) a.threads = c.threads;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
  return from_json(j);
}

Matrix FittedPipeline::prepare(const Dataset& d) const {
  std::vector<std::size_t> cols;
  for (const auto& name : feature_names) {
    const auto idx = d.feature_index(name);
    if (!idx) throw Error("input lacks model feature '" + name + "'");
    cols.push_back(*idx);
  }
  return scaler.transform(d.features.select_cols(cols));
}

std::vector<ClassId> FittedPipeline::map_labels(const Dataset& d) const {
  std::vector<ClassId> remap(d.class_names.size());
  for (std::size_t c = 0; c < d.class_names.size(); ++c) {
    const auto it = std::find(class_names.begin(), class_names.end(), d.class_names[c]);
    if (it == class_names.end()) {
      throw Error("class '" + d.class_names[c] + "' was not seen in training");
    }
    remap[c] = static_cast<ClassId>(it - class_names.begin());
  }
  std::vector<ClassId> out(d.rows());
  for (std::size_t r = 0; r < d.rows(); ++r) out[r] = remap[d.labels[r]];
  return out;
}

nlohmann::json FittedPipeline::to_json() const {
  return {{"format", "flowgate-pipeline"},
          {"version", 1},
          {"feature_names", feature_names},
          {"class_names", class_names},
          {"standardizer", scaler.to_json()},
          {"model", model.to_json()}};
}

FittedPipeline FittedPipeline::from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "flowgate-pipeline") {
    throw Error("not a flowgate pipeline document");
  }
  if (j.at("version").get<int>() != 1) throw Error("unsupported pipeline version");
  FittedPipeline p;
  p.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  p.class_names = j.at("class_names").get<std::vector<std::string>>();
  p.scaler = preprocess::Standardizer::from_json(j.at("standardizer"));
  p.model = models::Model::from_json(j.at("model"));
  if (p.model.num_features() != p.feature_names.size() ||
      p.scaler.dimension() != p.feature_names.size()) {
    throw Error("pipeline: feature count mismatch between parts");
  }
  return p;
}

void FittedPipeline::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << to_json().dump() << '\n';
  if (!out) throw Error("write failed: " + path);
}

FittedPipeline FittedPipeline::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
    return from_json(j);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path + ": " + e.what());
  }
}

FittedPipeline fit_pipeline(const Dataset& train, const models::ModelSpec& spec,
                            std::uint64_t seed, double* training_seconds) {
  FittedPipeline p;
  p.feature_names = train.feature_names;
  p.class_names = train.class_names;
  p.scaler = preprocess::Standardizer::fit(train.features, train.feature_names);
  const Matrix x = p.scaler.transform(train.features);
  auto trained = models::train(spec, x, train.labels, train.num_classes(), seed);
  p.model = std::move(trained.model);
  if (training_seconds) *training_seconds = trained.training_seconds;
  return p;
}

Dataset load_input(const ExperimentConfig& config) {
  if (config.synthetic) return synth::generate_synthetic(*config.synthetic);
  const auto& in = *config.input;
  return ingest::load_csv(in.path, in.label_column, in.timestamp_column, in.options);
}

namespace {

struct Partition {
  Dataset train;
  Dataset test;
};

// Evaluates a fitted pipeline on `test` and fills the timing fields.
metrics::MetricBundle score(const FittedPipeline& p, const Dataset& test,
                            double training_seconds, int repetitions) {
  const Matrix x = p.prepare(test);
  auto bundle = metrics::evaluate(test.labels, p.model.predict_proba(x), test.class_names);
  bundle.training_time_s = training_seconds;
  bundle.predictions_per_s =
      models::measure_throughput(p.model, x, repetitions, training_seconds).predictions_per_second;
  return bundle;
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& config, RunArtifacts* artifacts) {
  config.validate();
  const double started = wall_seconds();
  ExperimentReport report;
  report.environment = {{"tool", "flowgate"},
                        {"version", kToolVersion},
                        {"seed", config.seed},
                        {"threads", config.threads},
                        {"decisions", decisions_in_effect()},
                        {"config", config.to_json()}};

  // Stage 1: load and sample.
  Dataset data = load_input(config);
  report.environment["input_rows"] = data.rows();
  report.environment["input_features"] = data.num_features();
  if (config.sample) {
    const auto sampled = sampler::stratified_sample(data, *config.sample);
    const auto validation = sampler::validate_sample(data, sampled.sample);
    report.sample = to_json(validation, data, sampled.sample);
    data = sampled.sample;
  }

  // Stages 2-7 per configuration.
  std::map<std::string, Partition> partitions;
  std::vector<metrics::Cell> selection_cells;
  for (const auto& plan : config.splits) {
    Partition part;
    try {
      const auto idx = splitter::split(data, plan);
      const auto overlap = splitter::verify_no_overlap(data, idx);
      if (!overlap.shared_indices.empty()) throw Error("split produced overlapping partitions");
      Dataset train = data.subset(idx.train);
      const auto audit = leakage::audit_features(train, config.audit, config.threads);
      nlohmann::json lj = to_json(audit);
      lj["configuration"] = plan.name;
      lj["split"] = to_json(idx, plan);
      std::size_t pairs = 0;
      for (const auto& f : overlap.content_duplicates) pairs += f.pair_count;
      lj["split"]["cross_split_duplicate_pairs"] = pairs;
      report.leakage.push_back(std::move(lj));
      part.train = leakage::apply_removals(train, audit);
      part.test = leakage::apply_removals(data.subset(idx.test), audit);
      if (part.train.num_features() == 0) throw Error("audit removed every feature");
    } catch (const Error& e) {
      report.errors.push_back(plan.name + ": " + e.what());
      for (const auto& spec : config.algorithms) {
        AlgorithmCell cell;
        cell.configuration = plan.name;
        cell.algorithm = models::to_string(spec.family);
        cell.error = e.what();
        report.cells.push_back(std::move(cell));
      }
      continue;
    }

    for (std::size_t a = 0; a < config.algorithms.size(); ++a) {
      const auto& spec = config.algorithms[a];
      AlgorithmCell cell;
      cell.configuration = plan.name;
      cell.algorithm = models::to_string(spec.family);
      try {
        double train_s = 0.0;
        const auto model_seed = derive_seed(plan.seed, 200 + a);
        const auto pipeline = fit_pipeline(part.train, spec, model_seed, &train_s);
        cell.test = score(pipeline, part.test, train_s, config.throughput_repetitions);
        if (config.cv_folds >= 2) {
          metrics::CvOptions cv;
          cv.k = config.cv_folds;
          cv.seed = derive_seed(plan.seed, 300 + a);
          cv.metric = config.metric;
          cv.threads = config.threads;
          cell.cv = metrics::stratified_kfold_cv(part.train, spec, cv);
        }
        selection_cells.push_back({plan.name, cell.algorithm, cell.test->f1_macro,
                                   cell.test->roc_auc_macro, train_s});
      } catch (const Error& e) {
        cell.error = e.what();
        report.errors.push_back(plan.name + " / " + cell.algorithm + ": " + e.what());
      }
      report.cells.push_back(std::move(cell));
    }
    partitions.emplace(plan.name, std::move(part));
  }

  if (selection_cells.empty()) {
    report.wall_seconds = wall_seconds() - started;
    return report;
  }

  // Algorithm selection. Failed cells leave gaps, which are reported.
  const auto chosen = metrics::select_best_algorithm(selection_cells, true);
  {
    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& r : chosen.ranking) {
      ranking.push_back({{"algorithm", r.algorithm},
                         {"mean_f1_macro", r.mean_f1_macro},
                         {"mean_roc_auc", r.mean_roc_auc},
                         {"mean_training_time_s", r.mean_training_time_s},
                         {"cells", r.cells}});
    }
    report.selection = {{"criterion", "mean f1_macro across configurations"},
                        {"ranking", std::move(ranking)},
                        {"winner", chosen.winner},
                        {"best_configuration", chosen.best_configuration},
                        {"best_configuration_f1_macro", chosen.best_configuration_f1_macro},
                        {"missing_cells", chosen.missing_cells}};
  }
  const auto spec_it =
      std::find_if(config.algorithms.begin(), config.algorithms.end(), [&](const auto& s) {
        return models::to_string(s.family) == chosen.winner;
      });
  const std::size_t winner_index =
      static_cast<std::size_t>(spec_it - config.algorithms.begin());
  const auto& winner_spec = *spec_it;
  const auto plan_it =
      std::find_if(config.splits.begin(), config.splits.end(),
                   [&](const auto& p) { return p.name == chosen.best_configuration; });
  const Partition& part = partitions.at(chosen.best_configuration);
  const std::uint64_t variant_seed = derive_seed(plan_it->seed, 200 + winner_index);

  // Feature-selection variants on the chosen configuration, train rows only.
  std::vector<std::optional<FittedPipeline>> variant_pipelines;
  double original_train_s = 0.0;
  const std::size_t total_features = part.train.num_features();
  std::vector<VariantConfig> all_variants;
  all_variants.push_back({featsel::Method::kMrmr, 1.0});  // placeholder for "original"
  all_variants.insert(all_variants.end(), config.variants.begin(), config.variants.end());
  for (std::size_t v = 0; v < all_variants.size(); ++v) {
    VariantCell cell;
    const bool original = v == 0;
    cell.variant = original ? "original" : all_variants[v].name();
    cell.method = original ? "none" : featsel::to_string(all_variants[v].method);
    cell.fraction = original ? 1.0 : all_variants[v].fraction;
    try {
      Dataset train = part.train;
      if (!original) {
        featsel::SelectionResult sel;
        if (all_variants[v].method == featsel::Method::kMrmr) {
          Dataset scaled = part.train;
          scaled.features =
              preprocess::Standardizer::fit(part.train.features).transform(part.train.features);
          sel = featsel::select(featsel::Method::kMrmr, scaled, cell.fraction,
                                config.discretization);
        } else {
          sel = featsel::select(featsel::Method::kChi2, part.train, cell.fraction,
                                config.discretization);
        }
        train = part.train.select_features(sel.retained_indices);
      }
      cell.features = train.feature_names;
      cell.reduction_percent =
          100.0 * (1.0 - static_cast<double>(train.num_features()) /
                             static_cast<double>(total_features));
      double train_s = 0.0;
      auto pipeline = fit_pipeline(train, winner_spec, variant_seed, &train_s);
      cell.test = score(pipeline, part.test, train_s, config.throughput_repetitions);
      if (original) original_train_s = train_s;
      cell.training_time_delta_s = train_s - original_train_s;
      variant_pipelines.push_back(std::move(pipeline));
    } catch (const Error& e) {
      cell.error = e.what();
      report.errors.push_back("variant " + cell.variant + ": " + e.what());
      variant_pipelines.push_back(std::nullopt);
    }
    report.variants.push_back(std::move(cell));
  }

  // Best variant: highest F1-macro, then fewer features, then listing order.
  std::optional<std::size_t> best;
  for (std::size_t v = 0; v < report.variants.size(); ++v) {
    const auto& c = report.variants[v];
    if (!c.test) continue;
    if (!best) {
      best = v;
      continue;
    }
    const auto& b = report.variants[*best];
    if (c.test->f1_macro > b.test->f1_macro ||
        (c.test->f1_macro == b.test->f1_macro && c.features.size() < b.features.size())) {
      best = v;
    }
  }
  if (!best) {
    report.wall_seconds = wall_seconds() - started;
    return report;
  }

  const FittedPipeline& final_pipeline = *variant_pipelines[*best];
  const auto& final_cell = report.variants[*best];
  {
    nlohmann::json roc = nlohmann::json::array();
    for (std::size_t c = 0; c < part.test.class_names.size(); ++c) {
      const auto& name = part.test.class_names[c];
      const auto it = final_cell.test->roc_auc_per_class.find(name);
      std::uint64_t support = final_cell.test->confusion.row_sum(c);
      roc.push_back({{"class", name},
                     {"roc_auc", it == final_cell.test->roc_auc_per_class.end()
                                     ? nlohmann::json()
                                     : nlohmann::json(it->second)},
                     {"support", support},
                     {"class_accuracy", final_cell.test->confusion.per_class_accuracy(c)}});
    }
    report.final_model = {{"configuration", chosen.best_configuration},
                          {"algorithm", chosen.winner},
                          {"variant", final_cell.variant},
                          {"features", final_cell.features},
                          {"test", final_cell.test->to_json(true)},
                          {"roc_by_class", std::move(roc)}};
  }

  // Explanation of the final model on the leading test rows.
  try {
    const Matrix test_x = final_pipeline.prepare(part.test);
    const std::size_t rows = std::min(config.explain_rows, test_x.rows());
    std::vector<std::size_t> pick(rows);
    std::iota(pick.begin(), pick.end(), 0);
    const Matrix x = test_x.select_rows(pick);
    const Matrix train_x = final_pipeline.prepare(part.train);
    const auto background = column_means(train_x);
    const auto e = explain::explain_model(final_pipeline.model, x, background, config.threads);
    auto summary = explain::aggregate_importance(e, final_pipeline.feature_names,
                                                 final_pipeline.class_names);
    nlohmann::json imp = {{"rows_explained", rows},
                          {"attribution_scale", "margin"},
                          {"base_values", e.base_values}};
    double worst = 0.0;
    const Matrix margins = std::visit(
        [&](const auto& m) -> Matrix {
          using T = std::decay_t<decltype(m)>;
          if constexpr (std::is_same_v<T, models::RandomForestModel>) {
            return m.predict_proba(x);
          } else {
            return m.margins(x);
          }
        },
        final_pipeline.model.variant());
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < e.num_classes; ++c) {
        worst = std::max(worst, std::abs(e.reconstructed_margin(r, c) - margins(r, c)));
      }
    }
    imp["local_accuracy_max_error"] = worst;
    if (final_pipeline.model.family() != models::Family::kLogistic) {
      const auto gini = std::visit(
          [](const auto& m) -> explain::GiniImportance {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, models::LogisticModel>) {
              return {};
            } else {
              return explain::gini_importance(m);
            }
          },
          final_pipeline.model.variant());
      summary.gini = gini.values;
      summary.gini_no_splits = gini.no_splits;
      imp["comparison"] = explain::compare_importance(summary.global, summary.gini,
                                                      summary.feature_names, config.top_k)
                              .to_json();
    }
    imp["summary"] = summary.to_json();
    report.importance = std::move(imp);
    if (artifacts) {
      std::ostringstream csv;
      explain::write_shap_csv(csv, e, final_pipeline.feature_names, final_pipeline.class_names);
      artifacts->shap_csv = csv.str();
    }
  } catch (const Error& e) {
    report.errors.push_back(std::string("explain: ") + e.what());
  }
  if (artifacts) artifacts->final_pipeline = final_pipeline;
  report.wall_seconds = wall_seconds() - started;
  return report;
}

}  // namespace flowgate::experiment
