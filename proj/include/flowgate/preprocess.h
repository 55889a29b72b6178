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

#ifndef FLOWGATE_PREPROCESS_H_
#define FLOWGATE_PREPROCESS_H_

#include <string>
#include <vector>

#include "flowgate/common.h"
#include "json.hpp"

namespace flowgate::preprocess {

// z-score scaler whose statistics come from training rows only. Population
// (1/n) standard deviation.
class Standardizer {
 public:
  static constexpr double kDefaultEpsilon = 1e-12;

  Standardizer() = default;

  // Requires at least two rows.
  static Standardizer fit(const Matrix& train,
                          std::vector<std::string> feature_names = {},
                          double epsilon = kDefaultEpsilon);

  Matrix transform(const Matrix& x) const;

  std::size_t dimension() const { return mean_.size(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& stddev() const { return stddev_; }
  const std::vector<std::string>& feature_names() const { return names_; }
  double epsilon() const { return epsilon_; }
  std::size_t fitted_rows() const { return rows_; }
  // Columns with zero training variance.
  const std::vector<std::size_t>& degenerate_columns() const { return degenerate_; }

  nlohmann::json to_json() const;
  static Standardizer from_json(const nlohmann::json& j);

  friend bool operator==(const Standardizer&, const Standardizer&) = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> mean_;
  std::vector<double> stddev_;
  std::vector<std::size_t> degenerate_;
  double epsilon_ = kDefaultEpsilon;
  std::size_t rows_ = 0;
};

}  // namespace flowgate::preprocess

#endif  // FLOWGATE_PREPROCESS_H_
