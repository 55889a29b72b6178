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

#ifndef FLOWGATE_MODEL_H_
#define FLOWGATE_MODEL_H_

#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/dataset.h"
#include "flowgate/gbdt.h"
#include "flowgate/logistic.h"
#include "flowgate/random_forest.h"
#include "json.hpp"

namespace flowgate::models {

enum class Family { kGbdt, kRandomForest, kLogistic };

const char* to_string(Family f);
// Accepts "gbdt"/"xgboost", "random_forest"/"rf", "logistic"/"logreg".
Family parse_family(const std::string& text);

// A family plus the hyperparameters of that family; the other two parameter
// blocks are ignored.
struct ModelSpec {
  Family family = Family::kGbdt;
  GbdtParams gbdt;
  ForestParams forest;
  LogisticParams logistic;
  int threads = 1;

  nlohmann::json to_json() const;
  static ModelSpec from_json(const nlohmann::json& j);
};

class Model {
 public:
  using Variant = std::variant<GbdtModel, RandomForestModel, LogisticModel>;

  Model() = default;
  explicit Model(Variant v) : v_(std::move(v)) {}

  Family family() const;
  std::size_t num_classes() const;
  std::size_t num_features() const;
  const Variant& variant() const { return v_; }

  // Row-stochastic class probabilities. Throws on a feature count mismatch.
  Matrix predict_proba(const Matrix& x) const;
  // argmax of predict_proba, lowest class on ties.
  std::vector<ClassId> predict(const Matrix& x) const;

  nlohmann::json to_json() const;
  static Model from_json(const nlohmann::json& j);
  void save(const std::string& path) const;
  static Model load(const std::string& path);

 private:
  Variant v_;
};

// Training wall-clock time is measured here so every family reports it the
// same way.
struct TrainedModel {
  Model model;
  double training_seconds = 0.0;
};

TrainedModel train(const ModelSpec& spec, const Matrix& x, std::span<const ClassId> y,
                   std::size_t num_classes, std::uint64_t seed);

// Numerically stable in-place row softmax.
void softmax_rows(Matrix& m);

struct Throughput {
  // Median over repetitions; 0 for empty input.
  double predictions_per_second = 0.0;
  std::vector<double> samples;
  double training_seconds = 0.0;
  std::size_t rows = 0;
};

Throughput measure_throughput(const Model& model, const Matrix& x, int repetitions,
                              double training_seconds = 0.0);

}  // namespace flowgate::models

#endif  // FLOWGATE_MODEL_H_
