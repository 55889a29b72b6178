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

#ifndef FLOWGATE_METRICS_H_
#define FLOWGATE_METRICS_H_

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/dataset.h"
#include "flowgate/model.h"
#include "json.hpp"

namespace flowgate::metrics {

// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::vector<std::vector<std::uint64_t>> counts;
  std::vector<std::string> class_names;

  std::size_t num_classes() const { return counts.size(); }
  std::uint64_t total() const;
  std::uint64_t row_sum(std::size_t c) const;
  std::uint64_t col_sum(std::size_t c) const;
  // diag / row sum; 0 for an empty row.
  double per_class_accuracy(std::size_t c) const;

  nlohmann::json to_json() const;
  static ConfusionMatrix from_json(const nlohmann::json& j);
};

ConfusionMatrix confusion_matrix(std::span<const ClassId> truth,
                                 std::span<const ClassId> predictions, std::size_t num_classes,
                                 std::vector<std::string> class_names = {});

struct ClassificationMetrics {
  double accuracy = 0.0;
  std::vector<double> precision;
  std::vector<double> recall;
  std::vector<double> f1;
  std::vector<std::uint64_t> support;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  double f1_macro = 0.0;
  double precision_weighted = 0.0;
  double recall_weighted = 0.0;
  double f1_weighted = 0.0;
  // Zero-support classes left out of the macro averages.
  std::vector<std::size_t> excluded_from_macro;
};

// 0/0 ratios count as 0.
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

// Rank-based AUC (midranks on ties) of scores for positives against
// negatives. NaN when either side is empty.
double binary_auc(std::span<const double> scores, std::span<const std::uint8_t> positive);

struct RocAuc {
  // NaN for classes without positives or without negatives.
  std::vector<double> per_class;
  double macro = 0.0;
  // AUC over the flattened (indicator, score) pairs of all classes.
  double micro = 0.0;
  std::vector<std::size_t> undefined_classes;
};

RocAuc roc_auc_ovr(std::span<const ClassId> truth, const Matrix& probabilities);

enum class Metric { kF1Macro, kAccuracy, kF1Weighted, kRocAucMacro };
const char* to_string(Metric m);
Metric parse_metric(const std::string& text);

struct MetricBundle {
  double accuracy = 0.0;
  double f1_macro = 0.0;
  double f1_weighted = 0.0;
  double precision_macro = 0.0;
  double recall_macro = 0.0;
  std::map<std::string, double> roc_auc_per_class;  // defined classes only
  std::vector<std::string> roc_auc_undefined;
  double roc_auc_micro = 0.0;
  double roc_auc_macro = 0.0;
  double training_time_s = 0.0;
  double predictions_per_s = 0.0;
  ConfusionMatrix confusion;

  double value(Metric m) const;
  nlohmann::json to_json(bool include_timing = true) const;
  // Missing timing fields read as 0; null AUCs read as NaN.
  static MetricBundle from_json(const nlohmann::json& j);
};

MetricBundle evaluate(std::span<const ClassId> truth, const Matrix& probabilities,
                      const std::vector<std::string>& class_names);

// Student-t interval of fold scores: mean +/- t(1 - a/2, k - 1) * s / sqrt(k),
// s the sample standard deviation.
struct CvSummary {
  std::string metric = "f1_macro";
  std::vector<double> fold_scores;
  double mean = 0.0;
  double stddev = 0.0;
  double t_quantile = 0.0;
  double ci_half_width = 0.0;
  double confidence = 0.95;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
  static CvSummary from_json(const nlohmann::json& j);
};

double student_t_quantile(double p, double degrees_of_freedom);

CvSummary summarize_folds(std::vector<double> fold_scores, double confidence = 0.95);

// Fold id per row. Each class is shuffled with its own stream and dealt to
// folds by largest-remainder counts; the folds receiving a class's remainder
// rotate so fold sizes stay within one row of each other.
std::vector<std::size_t> stratified_fold_ids(std::span<const ClassId> labels,
                                             std::size_t num_classes, std::size_t k,
                                             std::uint64_t seed);

struct CvOptions {
  std::size_t k = 5;
  std::uint64_t seed = 0;
  Metric metric = Metric::kF1Macro;
  // Fit a standardizer on each fold's training part.
  bool standardize = true;
  int threads = 1;
};

CvSummary stratified_kfold_cv(const Dataset& data, const models::ModelSpec& spec,
                              const CvOptions& options);

// One (configuration, algorithm) evaluation used for algorithm selection.
struct Cell {
  std::string configuration;
  std::string algorithm;
  double f1_macro = 0.0;
  double roc_auc = 0.0;
  double training_time_s = 0.0;
};

struct AlgorithmRank {
  std::string algorithm;
  double mean_f1_macro = 0.0;
  double mean_roc_auc = 0.0;
  double mean_training_time_s = 0.0;
  std::size_t cells = 0;
};

struct AlgorithmSelection {
  // Best first.
  std::vector<AlgorithmRank> ranking;
  std::string winner;
  // The winner's configuration with the highest F1-macro.
  std::string best_configuration;
  double best_configuration_f1_macro = 0.0;
  std::vector<std::string> missing_cells;
};

// Ranks algorithms by mean F1-macro across configurations; ties go to the
// higher mean ROC-AUC, then the lower mean training time. Every algorithm
// must cover every configuration unless allow_missing is set, in which case
// means run over the cells present and the gaps are listed.
AlgorithmSelection select_best_algorithm(const std::vector<Cell>& cells,
                                         bool allow_missing = false);

}  // namespace flowgate::metrics

#endif  // FLOWGATE_METRICS_H_
