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

#ifndef FLOWGATE_GBDT_H_
#define FLOWGATE_GBDT_H_

#include <cstdint>
#include <span>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/dataset.h"
#include "flowgate/tree.h"
#include "json.hpp"

namespace flowgate::models {

struct GbdtParams {
  int rounds = 100;
  int max_depth = 8;
  double learning_rate = 0.1;
  // L2 penalty on leaf weights.
  double lambda = 1.0;
  // Minimum hessian sum in each child of a split.
  double min_child_weight = 1.0;
  double min_split_gain = 0.0;
  int max_bins = 256;
  int threads = 1;
};

// Quantile cut points per feature; bin(x) = number of cuts <= x, so a split
// after bin b is the rule x < cuts[b].
class BinMapper {
 public:
  static BinMapper fit(const Matrix& x, int max_bins);
  std::uint8_t bin(std::size_t feature, double value) const;
  const std::vector<double>& cuts(std::size_t feature) const { return cuts_[feature]; }
  std::size_t num_features() const { return cuts_.size(); }

 private:
  std::vector<std::vector<double>> cuts_;
};

class GbdtModel {
 public:
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  double learning_rate = 0.1;
  std::vector<double> base_score;
  // rounds[r][c]: regression tree for class c in boosting round r.
  std::vector<std::vector<DecisionTree>> rounds;
  GbdtParams params;

  std::size_t num_trees() const { return rounds.size() * num_classes; }

  // base_score + learning_rate * sum of tree outputs, per class.
  Matrix margins(const Matrix& x) const;
  std::vector<double> margin_row(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static GbdtModel from_json(const nlohmann::json& j);
};

// Multi-class softmax boosting with Newton leaf weights -G / (H + lambda).
// No randomness is involved; the seed is accepted for interface symmetry.
GbdtModel train_gbdt(const Matrix& x, std::span<const ClassId> y, std::size_t num_classes,
                     const GbdtParams& params, std::uint64_t seed = 0);

}  // namespace flowgate::models

#endif  // FLOWGATE_GBDT_H_
