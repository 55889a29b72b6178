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

#ifndef FLOWGATE_LEAKAGE_GUARD_H_
#define FLOWGATE_LEAKAGE_GUARD_H_

#include <string>
#include <vector>

#include "flowgate/dataset.h"

namespace flowgate::leakage {

enum class Rule { kConstant, kNearConstant, kTargetCorrelation, kSingleFeatureAuc };
enum class Verdict { kRemove, kWarn };

const char* to_string(Rule r);
const char* to_string(Verdict v);

struct AuditThresholds {
  double near_constant_frequency = 0.999;
  bool near_constant_removes = false;
  double target_correlation = 0.99;
  double single_feature_auc = 0.999;
  // Breaches of these lower levels are reported as warnings only.
  double target_correlation_warn = 0.95;
  double single_feature_auc_warn = 0.99;
};

struct Finding {
  std::string feature;
  Rule rule;
  double statistic;
  double threshold;
  Verdict verdict;
  // Class whose one-vs-rest statistic triggered the finding, -1 if none.
  int class_id = -1;
};

struct LeakageReport {
  AuditThresholds thresholds;
  std::size_t rows_audited = 0;
  std::vector<Finding> findings;  // sorted by (feature, rule)
  std::vector<std::string> removed_features;  // sorted
};

// Per-feature statistics the rules are evaluated on.
struct FeatureStats {
  std::size_t distinct_values = 0;
  double dominant_frequency = 0.0;
  double max_abs_correlation = 0.0;
  int correlation_class = -1;
  double max_auc = 0.5;  // oriented, in [0.5, 1]
  int auc_class = -1;
};

FeatureStats feature_stats(std::span<const double> column,
                           std::span<const ClassId> labels, std::size_t num_classes);

// Rank-based one-vs-rest AUC with midranks for ties; not oriented. Returns
// NaN when the class has no positives or no negatives.
double one_vs_rest_auc(std::span<const double> scores, std::span<const ClassId> labels,
                       ClassId positive);

// Pearson correlation between the column and the class indicator; 0 when
// either side is constant.
double point_biserial(std::span<const double> column, std::span<const ClassId> labels,
                      ClassId positive);

// Must be given training rows only.
LeakageReport audit_features(const Dataset& train, const AuditThresholds& thresholds,
                             int threads = 1);

Dataset apply_removals(const Dataset& d, const LeakageReport& report);

}  // namespace flowgate::leakage

#endif  // FLOWGATE_LEAKAGE_GUARD_H_
