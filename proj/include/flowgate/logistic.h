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

#ifndef FLOWGATE_LOGISTIC_H_
#define FLOWGATE_LOGISTIC_H_

#include <cstdint>
#include <span>
#include <vector>

#include "flowgate/common.h"
#include "flowgate/dataset.h"
#include "json.hpp"

namespace flowgate::models {

struct LogisticParams {
  double l2 = 1e-4;
  int max_iterations = 500;
  double tolerance = 1e-6;
  int memory = 10;
};

class LogisticModel {
 public:
  std::size_t num_classes = 0;
  std::size_t num_features = 0;
  Matrix weights;  // classes x features
  std::vector<double> bias;
  LogisticParams params;
  // Objective after every accepted iteration, starting at the initial point.
  std::vector<double> loss_history;
  int iterations = 0;
  bool converged = false;

  Matrix margins(const Matrix& x) const;
  std::vector<double> margin_row(std::span<const double> x) const;

  nlohmann::json to_json() const;
  static LogisticModel from_json(const nlohmann::json& j);
};

// Mean softmax cross-entropy plus (l2 / 2) * ||W||^2 (bias unpenalized).
// theta packs W row-major followed by the bias; grad has the same layout.
double logistic_objective(const Matrix& x, std::span<const ClassId> y,
                          std::size_t num_classes, double l2, std::span<const double> theta,
                          std::span<double> grad);

// Full-batch L-BFGS with Armijo backtracking from zero weights.
LogisticModel train_logistic(const Matrix& x, std::span<const ClassId> y,
                             std::size_t num_classes, const LogisticParams& params,
                             std::uint64_t seed = 0);

}  // namespace flowgate::models

#endif  // FLOWGATE_LOGISTIC_H_
