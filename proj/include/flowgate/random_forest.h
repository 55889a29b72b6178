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

#ifndef FLOWGATE_RANDOM_FOREST_H_
#define FLOWGATE_RANDOM_FOREST_H_

#include <cstdint>
#include <span>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/dataset.h"
#include "flowgate/tree.h"
#include "json.hpp"

namespace flowgate::models {

struct ForestParams {
  int trees = 100;
  // 0 means unlimited.
  int max_depth = 15;
  bool bootstrap = true;
  double bootstrap_fraction = 1.0;
  // Features examined per split; 0 means floor(sqrt(d)).
  int max_features = 0;
  int min_samples_split = 2;
  int threads = 1;
};

class RandomForestModel {
 public:
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  // Leaf values are class distributions (sum 1).
  std::vector<DecisionTree> trees;
  ForestParams params;

  // Mean of per-tree leaf distributions.
  Matrix predict_proba(const Matrix& x) const;

  nlohmann::json to_json() const;
  static RandomForestModel from_json(const nlohmann::json& j);
};

// Gini-impurity trees on bootstrap samples with per-split feature
// subsampling. Splits are found by exact enumeration of midpoints between
// consecutive distinct values.
RandomForestModel train_random_forest(const Matrix& x, std::span<const ClassId> y,
                                      std::size_t num_classes, const ForestParams& params,
                                      std::uint64_t seed);

}  // namespace flowgate::models

#endif  // FLOWGATE_RANDOM_FOREST_H_
