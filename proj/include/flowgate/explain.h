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

#ifndef FLOWGATE_EXPLAIN_H_
#define FLOWGATE_EXPLAIN_H_

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/gbdt.h"
#include "flowgate/logistic.h"
#include "flowgate/model.h"
#include "flowgate/random_forest.h"
#include "flowgate/tree.h"
#include "json.hpp"

namespace flowgate::explain {

// Attributions on the margin scale: GBDT and logistic margins are
// pre-softmax scores, a forest's margin is its averaged class distribution.
struct ShapExplanation {
  std::size_t num_rows = 0;
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  // [row][class][feature], row-major.
  std::vector<double> values;
  std::vector<double> base_values;  // per class
  // Caller's row index for each explained row.
  std::vector<std::size_t> row_index;

  double& at(std::size_t r, std::size_t c, std::size_t f) {
    return values[(r * num_classes + c) * num_features + f];
  }
  double at(std::size_t r, std::size_t c, std::size_t f) const {
    return values[(r * num_classes + c) * num_features + f];
  }
  // base + sum of attributions for (row, class).
  double reconstructed_margin(std::size_t r, std::size_t c) const;
};

// Path-dependent TreeSHAP of one tree for one input; phi is
// [output][feature] and is accumulated into (scaled by `scale`).
void tree_shap(const models::DecisionTree& tree, std::span<const double> x,
               std::span<double> phi, std::size_t num_features, double scale = 1.0);

// Cover-weighted mean leaf value per output. Throws if any node lacks a
// positive cover.
std::vector<double> expected_value(const models::DecisionTree& tree);

ShapExplanation treeshap(const models::GbdtModel& model, const Matrix& x, int threads = 1);
ShapExplanation treeshap(const models::RandomForestModel& model, const Matrix& x,
                         int threads = 1);

// phi = w[c][j] * (x_j - background_j); base = w[c] . background + b[c].
ShapExplanation linear_shap(const models::LogisticModel& model, const Matrix& x,
                            std::span<const double> background);

// Dispatches on the model family. Logistic models use `background` (training
// means), which must then be non-empty.
ShapExplanation explain_model(const models::Model& model, const Matrix& x,
                              std::span<const double> background, int threads = 1);

struct ImportanceSummary {
  std::vector<std::string> feature_names;
  std::vector<std::string> class_names;
  // Mean |attribution| over rows and classes.
  std::vector<double> global;
  // [feature][class] mean |attribution| over rows.
  std::vector<std::vector<double>> per_class;
  // Total split gain per feature normalized to sum 1.
  std::vector<double> gini;
  // True when the ensemble has no splits (gini all zero).
  bool gini_no_splits = false;

  // Feature indices by global importance, descending; ties by index.
  std::vector<std::size_t> ranked() const;
  nlohmann::json to_json() const;
};

struct GiniImportance {
  std::vector<double> values;
  bool no_splits = false;
};

GiniImportance gini_importance(std::span<const models::DecisionTree> trees,
                               std::size_t num_features);
GiniImportance gini_importance(const models::GbdtModel& model);
GiniImportance gini_importance(const models::RandomForestModel& model);

ImportanceSummary aggregate_importance(const ShapExplanation& e,
                                       std::vector<std::string> feature_names,
                                       std::vector<std::string> class_names);

struct ImportanceComparison {
  std::size_t top_k = 0;
  std::vector<std::string> top_shap;
  std::vector<std::string> top_gini;
  std::vector<std::string> intersection;
  // Spearman correlation of the two score vectors (average ranks on ties).
  double spearman = 0.0;

  nlohmann::json to_json() const;
};

ImportanceComparison compare_importance(std::span<const double> shap,
                                        std::span<const double> gini,
                                        const std::vector<std::string>& feature_names,
                                        std::size_t top_k);

// Average ranks (1-based) of the values, ascending.
std::vector<double> average_ranks(std::span<const double> v);
double spearman(std::span<const double> a, std::span<const double> b);

// Columnar export: row,class,feature,value.
void write_shap_csv(std::ostream& out, const ShapExplanation& e,
                    const std::vector<std::string>& feature_names,
                    const std::vector<std::string>& class_names);

}  // namespace flowgate::explain

#endif  // FLOWGATE_EXPLAIN_H_
