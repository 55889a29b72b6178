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

#ifndef FLOWGATE_EXPERIMENT_H_
#define FLOWGATE_EXPERIMENT_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flowgate/dataset.h"
#include "flowgate/featsel.h"
#include "flowgate/leakage_guard.h"
#include "flowgate/metrics.h"
#include "flowgate/model.h"
#include "flowgate/preprocess.h"
#include "flowgate/sampler.h"
#include "flowgate/splitter.h"
#include "flowgate/synth.h"
#include "json.hpp"

namespace flowgate::experiment {

inline constexpr const char* kReportSchema = "flowgate-report/1";
inline constexpr const char* kToolVersion = "0.1.0";

struct InputConfig {
  std::string path;
  std::string label_column = "Label";
  std::optional<std::string> timestamp_column;
  ingest::IngestOptions options;
};

// A feature-selection variant: method plus retention fraction.
struct VariantConfig {
  featsel::Method method = featsel::Method::kMrmr;
  double fraction = 1.0;

  std::string name() const;
};

struct ExperimentConfig {
  // Exactly one of input and synthetic is set.
  std::optional<InputConfig> input;
  std::optional<synth::SynthSpec> synthetic;
  // Sampling is skipped when unset.
  std::optional<sampler::SamplePlan> sample;
  leakage::AuditThresholds audit;
  std::vector<splitter::SplitPlan> splits;
  std::vector<VariantConfig> variants;
  featsel::DiscretizationPlan discretization;
  std::vector<models::ModelSpec> algorithms;
  metrics::Metric metric = metrics::Metric::kF1Macro;
  std::size_t cv_folds = 5;
  std::size_t explain_rows = 200;
  std::size_t top_k = 10;
  int throughput_repetitions = 5;
  std::uint64_t seed = 0;
  int threads = 1;

  // Throws Error naming the first problem.
  void validate() const;
  nlohmann::json to_json() const;
  // Parses and validates; unknown keys are rejected so typos surface.
  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig load(const std::string& path);
};

// Standardizer plus model restricted to named features; what `train` saves
// and `evaluate` / `explain` reload.
struct FittedPipeline {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  preprocess::Standardizer scaler;
  models::Model model;

  // Selects feature_names from d (by name) and standardizes them.
  Matrix prepare(const Dataset& d) const;
  // Relabels d's classes onto class_names; throws on unseen classes.
  std::vector<ClassId> map_labels(const Dataset& d) const;

  nlohmann::json to_json() const;
  static FittedPipeline from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static FittedPipeline load(const std::string& path);
};

// Fits the standardizer on `train` and trains `spec` on the standardized rows.
FittedPipeline fit_pipeline(const Dataset& train, const models::ModelSpec& spec,
                            std::uint64_t seed, double* training_seconds = nullptr);

// One (configuration, algorithm) result.
struct AlgorithmCell {
  std::string configuration;
  std::string algorithm;
  std::optional<metrics::MetricBundle> test;
  std::optional<metrics::CvSummary> cv;
  std::string error;

  nlohmann::json to_json(bool include_timing) const;
  static AlgorithmCell from_json(const nlohmann::json& j);
};

// One feature-selection variant on the chosen configuration and algorithm.
struct VariantCell {
  std::string variant;  // "original" or e.g. "mrmr_70"
  std::string method;
  double fraction = 1.0;
  std::vector<std::string> features;
  double reduction_percent = 0.0;
  std::optional<metrics::MetricBundle> test;
  // Training time minus that of the original variant.
  double training_time_delta_s = 0.0;
  std::string error;

  nlohmann::json to_json(bool include_timing) const;
  static VariantCell from_json(const nlohmann::json& j);
};

struct ExperimentReport {
  std::string schema = kReportSchema;
  // seed, version, decisions in effect, configuration echo.
  nlohmann::json environment = nlohmann::json::object();
  // Sample validation; null when sampling was skipped.
  nlohmann::json sample;
  // One leakage report per configuration (audited on its train rows).
  nlohmann::json leakage = nlohmann::json::array();
  std::vector<AlgorithmCell> cells;
  nlohmann::json selection;  // ranking and winner; null if nothing succeeded
  std::vector<VariantCell> variants;
  // Best algorithm x best variant on the best configuration.
  nlohmann::json final_model;
  // SHAP and Gini summaries with their comparison (Figs. 4 and 5 shape).
  nlohmann::json importance;
  std::vector<std::string> errors;
  double wall_seconds = 0.0;

  nlohmann::json to_json(bool include_timing = true) const;
  static ExperimentReport from_json(const nlohmann::json& j);
};

struct RunArtifacts {
  // Final pipeline, when one was trained.
  std::optional<FittedPipeline> final_pipeline;
  // SHAP values of the explained rows (CSV text).
  std::string shap_csv;
};

// Stages in order: sample, split, audit (train rows), standardize (train),
// train, evaluate (test), CV (train partition), algorithm selection, feature
// selection variants (train), final model, explanation. A failing cell is
// recorded and the run continues.
ExperimentReport run_experiment(const ExperimentConfig& config, RunArtifacts* artifacts = nullptr);

// Loads the configured input (CSV or synthetic).
Dataset load_input(const ExperimentConfig& config);

enum class ReportFormat { kJson, kMarkdown };

std::string emit_report(const ExperimentReport& r, ReportFormat format,
                        bool include_timing = true);

nlohmann::json to_json(const sampler::SampleValidation& v, const Dataset& parent,
                       const Dataset& sample);
nlohmann::json to_json(const leakage::LeakageReport& r);
nlohmann::json to_json(const featsel::SelectionResult& s);
nlohmann::json to_json(const splitter::SplitIndices& s, const splitter::SplitPlan& plan);

}  // namespace flowgate::experiment

#endif  // FLOWGATE_EXPERIMENT_H_
