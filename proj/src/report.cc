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

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "flowgate/experiment.h"

namespace flowgate::experiment {
namespace {

// Keys whose values depend on wall-clock time.
const std::set<std::string>& timing_keys() {
  static const std::set<std::string> kKeys = {"training_time_s", "predictions_per_s",
                                              "training_time_delta_s",
                                              "mean_training_time_s", "wall_seconds"};
  return kKeys;
}

void strip_timing(nlohmann::json& j) {
  if (j.is_object()) {
    for (auto it = j.begin(); it != j.end();) {
      if (timing_keys().count(it.key())) {
        it = j.erase(it);
      } else {
        strip_timing(*it);
        ++it;
      }
    }
  } else if (j.is_array()) {
    for (auto& v : j) strip_timing(v);
  }
}

nlohmann::json or_null(double v) {
  return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * v);
  return buf;
}

std::string fixed(double v, int digits) {
  if (!std::isfinite(v)) return "n/a";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string json_number(const nlohmann::json& j, int digits) {
  return j.is_number() ? fixed(j.get<double>(), digits) : "n/a";
}

}  // namespace

nlohmann::json to_json(const sampler::SampleValidation& v, const Dataset& parent,
                       const Dataset& sample) {
  const auto pd = ingest::class_distribution(parent);
  const auto sd = ingest::class_distribution(sample);
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& [c, n] : pd.counts) {
    const auto it = sd.counts.find(c);
    const auto dev = v.per_class_rate_deviation.find(c);
    classes.push_back({{"class", parent.class_names[c]},
                       {"parent", n},
                       {"sample", it == sd.counts.end() ? 0 : it->second},
                       {"proportion_deviation",
                        dev == v.per_class_rate_deviation.end() ? 0.0 : dev->second}});
  }
  double max_mean_diff = 0.0;
  for (const auto& [name, d] : v.per_feature_mean_relative_diff) {
    max_mean_diff = std::max(max_mean_diff, d);
  }
  std::vector<std::string> flagged;
  for (ClassId c : v.flagged_classes) flagged.push_back(parent.class_names[c]);
  return {{"parent_rows", pd.total},
          {"sample_rows", sd.total},
          {"classes", std::move(classes)},
          {"max_feature_mean_relative_diff_percent", max_mean_diff},
          {"feature_mean_relative_diff_percent", v.per_feature_mean_relative_diff},
          {"correlation_matrix_distance", v.correlation_matrix_distance},
          {"tolerance", v.tolerance},
          {"flagged_classes", flagged}};
}

nlohmann::json to_json(const leakage::LeakageReport& r) {
  nlohmann::json findings = nlohmann::json::array();
  for (const auto& f : r.findings) {
    findings.push_back({{"feature", f.feature},
                        {"rule", leakage::to_string(f.rule)},
                        {"statistic", or_null(f.statistic)},
                        {"threshold", f.threshold},
                        {"verdict", leakage::to_string(f.verdict)},
                        {"class_id", f.class_id}});
  }
  const auto& t = r.thresholds;
  return {{"rows_audited", r.rows_audited},
          {"thresholds",
           {{"near_constant_frequency", t.near_constant_frequency},
            {"near_constant_removes", t.near_constant_removes},
            {"target_correlation", t.target_correlation},
            {"single_feature_auc", t.single_feature_auc},
            {"target_correlation_warn", t.target_correlation_warn},
            {"single_feature_auc_warn", t.single_feature_auc_warn}}},
          {"findings", std::move(findings)},
          {"removed_features", r.removed_features}};
}

nlohmann::json to_json(const featsel::SelectionResult& s) {
  return {{"method", featsel::to_string(s.method)},
          {"retention_fraction", s.retention_fraction},
          {"retained", s.retained},
          {"retained_indices", s.retained_indices},
          {"scores", s.scores},
          {"relevance", s.relevance},
          {"bins_per_feature", s.discretization.bins_per_feature},
          {"bin_strategy", featsel::to_string(s.discretization.strategy)}};
}

nlohmann::json to_json(const splitter::SplitIndices& s, const splitter::SplitPlan& plan) {
  return {{"name", plan.name},
          {"mode", splitter::to_string(plan.mode)},
          {"fractions", {plan.train_fraction, plan.validation_fraction, plan.test_fraction}},
          {"sizes", {s.train.size(), s.validation.size(), s.test.size()}},
          {"warnings", s.warnings}};
}

nlohmann::json AlgorithmCell::to_json(bool include_timing) const {
  nlohmann::json j = {{"configuration", configuration}, {"algorithm", algorithm}};
  j["test"] = test ? test->to_json(include_timing) : nlohmann::json();
  j["cv"] = cv ? cv->to_json() : nlohmann::json();
  if (!error.empty()) j["error"] = error;
  return j;
}

AlgorithmCell AlgorithmCell::from_json(const nlohmann::json& j) {
  AlgorithmCell c;
  c.configuration = j.at("configuration").get<std::string>();
  c.algorithm = j.at("algorithm").get<std::string>();
  if (!j.at("test").is_null()) c.test = metrics::MetricBundle::from_json(j.at("test"));
  if (!j.at("cv").is_null()) c.cv = metrics::CvSummary::from_json(j.at("cv"));
  c.error = j.value("error", std::string());
  return c;
}

nlohmann::json VariantCell::to_json(bool include_timing) const {
  nlohmann::json j = {{"variant", variant},
                      {"method", method},
                      {"fraction", fraction},
                      {"features", features},
                      {"feature_count", features.size()},
                      {"reduction_percent", reduction_percent}};
  j["test"] = test ? test->to_json(include_timing) : nlohmann::json();
  if (include_timing) j["training_time_delta_s"] = training_time_delta_s;
  if (!error.empty()) j["error"] = error;
  return j;
}

VariantCell VariantCell::from_json(const nlohmann::json& j) {
  VariantCell c;
  c.variant = j.at("variant").get<std::string>();
  c.method = j.at("method").get<std::string>();
  c.fraction = j.at("fraction").get<double>();
  c.features = j.at("features").get<std::vector<std::string>>();
  c.reduction_percent = j.at("reduction_percent").get<double>();
  if (!j.at("test").is_null()) c.test = metrics::MetricBundle::from_json(j.at("test"));
  c.training_time_delta_s = j.value("training_time_delta_s", 0.0);
  c.error = j.value("error", std::string());
  return c;
}

nlohmann::json ExperimentReport::to_json(bool include_timing) const {
  nlohmann::json cells_json = nlohmann::json::array();
  for (const auto& c : cells) cells_json.push_back(c.to_json(include_timing));
  nlohmann::json variants_json = nlohmann::json::array();
  for (const auto& v : variants) variants_json.push_back(v.to_json(include_timing));
  nlohmann::json j = {{"schema", schema},
                      {"environment", environment},
                      {"sample", sample},
                      {"leakage", leakage},
                      {"cells", std::move(cells_json)},
                      {"selection", selection},
                      {"variants", std::move(variants_json)},
                      {"final_model", final_model},
                      {"importance", importance},
                      {"errors", errors}};
  if (include_timing) {
    j["wall_seconds"] = wall_seconds;
  } else {
    strip_timing(j);
  }
  return j;
}

ExperimentReport ExperimentReport::from_json(const nlohmann::json& j) {
  ExperimentReport r;
  r.schema = j.at("schema").get<std::string>();
  if (r.schema != kReportSchema) throw Error("unsupported report schema " + r.schema);
  r.environment = j.at("environment");
  r.sample = j.at("sample");
  r.leakage = j.at("leakage");
  for (const auto& c : j.at("cells")) r.cells.push_back(AlgorithmCell::from_json(c));
  r.selection = j.at("selection");
  for (const auto& v : j.at("variants")) r.variants.push_back(VariantCell::from_json(v));
  r.final_model = j.at("final_model");
  r.importance = j.at("importance");
  r.errors = j.at("errors").get<std::vector<std::string>>();
  r.wall_seconds = j.value("wall_seconds", 0.0);
  return r;
}

std::string emit_report(const ExperimentReport& r, ReportFormat format, bool include_timing) {
  if (format == ReportFormat::kJson) return r.to_json(include_timing).dump(2) + "\n";

  std::ostringstream md;
  md << "# Flowgate experiment report\n\n";
  md << "Schema `" << r.schema << "`";
  if (r.environment.contains("seed")) md << ", seed " << r.environment.at("seed").dump();
  md << ".\n\n";

  if (r.sample.is_object()) {
    md << "## Sample validation\n\n";
    md << "| Class | Parent | Sample | Proportion deviation |\n|---|---|---|---|\n";
    for (const auto& c : r.sample.at("classes")) {
      md << "| " << c.at("class").get<std::string>() << " | " << c.at("parent").dump() << " | "
         << c.at("sample").dump() << " | " << json_number(c.at("proportion_deviation"), 6)
         << " |\n";
    }
    md << "\nCorrelation matrix distance: "
       << json_number(r.sample.at("correlation_matrix_distance"), 6) << "\n\n";
  }

  if (!r.leakage.empty()) {
    md << "## Leakage audit\n\n| Configuration | Rows audited | Removed features |\n"
          "|---|---|---|\n";
    for (const auto& l : r.leakage) {
      std::string removed;
      for (const auto& f : l.at("removed_features")) {
        removed += (removed.empty() ? "" : ", ") + f.get<std::string>();
      }
      md << "| " << l.at("configuration").get<std::string>() << " | "
         << l.at("rows_audited").dump() << " | " << (removed.empty() ? "none" : removed)
         << " |\n";
    }
    md << "\n";
  }

  md << "## Algorithm performance by configuration\n\n";
  md << "| Algorithm | Split | Accuracy | F1-Macro | ROC-AUC |";
  if (include_timing) md << " Training Time (s) | Prediction Speed |";
  md << " CV Stability |\n|---|---|---|---|---|";
  if (include_timing) md << "---|---|";
  md << "---|\n";
  for (const auto& c : r.cells) {
    md << "| " << c.algorithm << " | " << c.configuration << " | ";
    if (!c.test) {
      md << "error: " << c.error << " | | |";
      if (include_timing) md << " | |";
      md << " |\n";
      continue;
    }
    md << pct(c.test->accuracy) << " | " << pct(c.test->f1_macro) << " | "
       << fixed(c.test->roc_auc_macro, 4) << " |";
    if (include_timing) {
      md << " " << fixed(c.test->training_time_s, 2) << " | "
         << fixed(c.test->predictions_per_s, 0) << " |";
    }
    md << " " << (c.cv ? fixed(c.cv->mean, 5) + " ± " + fixed(c.cv->ci_half_width, 5) : "n/a")
       << " |\n";
  }
  md << "\n";

  if (r.selection.is_object()) {
    md << "Selected algorithm: " << r.selection.at("winner").get<std::string>()
       << " (best configuration " << r.selection.at("best_configuration").get<std::string>()
       << ").\n\n";
  }

  if (!r.variants.empty()) {
    md << "## Feature selection\n\n";
    md << "| Method | Features | Accuracy | F1-Macro | ROC-AUC |";
    if (include_timing) md << " Training Time (s) |";
    md << " Reduction |\n|---|---|---|---|---|";
    if (include_timing) md << "---|";
    md << "---|\n";
    for (const auto& v : r.variants) {
      md << "| " << v.variant << " | " << v.features.size() << " | ";
      if (!v.test) {
        md << "error: " << v.error << " | | |";
        if (include_timing) md << " |";
        md << " |\n";
        continue;
      }
      md << pct(v.test->accuracy) << " | " << pct(v.test->f1_macro) << " | "
         << fixed(v.test->roc_auc_macro, 4) << " |";
      if (include_timing) md << " " << fixed(v.test->training_time_s, 2) << " |";
      md << " " << fixed(v.reduction_percent, 1) << "% |\n";
    }
    md << "\n";
  }

  if (r.final_model.is_object()) {
    const auto& t = r.final_model.at("test");
    md << "## Final configuration\n\n";
    md << "Algorithm " << r.final_model.at("algorithm").get<std::string>() << ", split "
       << r.final_model.at("configuration").get<std::string>() << ", variant "
       << r.final_model.at("variant").get<std::string>() << ".\n\n";
    md << "| Metric | Value |\n|---|---|\n";
    for (const char* key : {"accuracy", "f1_macro", "f1_weighted", "precision_macro",
                            "recall_macro", "roc_auc_micro", "roc_auc_macro"}) {
      md << "| " << key << " | " << json_number(t.at(key), 6) << " |\n";
    }
    md << "\n## ROC-AUC by class\n\n| Class | ROC-AUC | Support | Class accuracy |\n"
          "|---|---|---|---|\n";
    for (const auto& row : r.final_model.at("roc_by_class")) {
      md << "| " << row.at("class").get<std::string>() << " | "
         << json_number(row.at("roc_auc"), 6) << " | " << row.at("support").dump() << " | "
         << json_number(row.at("class_accuracy"), 5) << " |\n";
    }
    md << "\n";
  }

  if (r.importance.is_object() && r.importance.contains("summary")) {
    md << "## Feature importance\n\n| Feature | Mean abs SHAP | Gini |\n|---|---|---|\n";
    std::size_t shown = 0;
    for (const auto& f : r.importance.at("summary").at("features")) {
      if (shown++ == 15) break;
      md << "| " << f.at("feature").get<std::string>() << " | "
         << json_number(f.at("global"), 6) << " | "
         << (f.contains("gini") ? json_number(f.at("gini"), 6) : "n/a") << " |\n";
    }
    if (r.importance.contains("comparison")) {
      md << "\nSpearman rank correlation (SHAP vs Gini): "
         << json_number(r.importance.at("comparison").at("spearman"), 4) << "\n";
    }
    md << "\n";
  }

  if (!r.errors.empty()) {
    md << "## Errors\n\n";
    for (const auto& e : r.errors) md << "- " << e << "\n";
    md << "\n";
  }
  return md.str();
}

}  // namespace flowgate::experiment
