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

#include "flowgate/preprocess.h"

#include <algorithm>
#include <cmath>

namespace flowgate::preprocess {

Standardizer Standardizer::fit(const Matrix& train, std::vector<std::string> feature_names,
                               double epsilon) {
  if (train.rows() < 2) throw Error("Standardizer::fit: need at least 2 training rows");
  if (!feature_names.empty() && feature_names.size() != train.cols()) {
    throw Error("Standardizer::fit: feature name count mismatch");
  }
  Standardizer s;
  s.names_ = std::move(feature_names);
  s.epsilon_ = epsilon;
  s.rows_ = train.rows();
  const std::size_t d = train.cols();
  // Welford's online update, one pass over the rows.
  std::vector<double> mean(d, 0.0), m2(d, 0.0);
  for (std::size_t r = 0; r < train.rows(); ++r) {
    const double k = static_cast<double>(r + 1);
    for (std::size_t j = 0; j < d; ++j) {
      const double x = train(r, j);
      const double delta = x - mean[j];
      mean[j] += delta / k;
      m2[j] += delta * (x - mean[j]);
    }
  }
  s.mean_ = mean;
  s.stddev_.resize(d);
  for (std::size_t j = 0; j < d; ++j) {
    s.stddev_[j] = std::sqrt(std::max(0.0, m2[j] / static_cast<double>(train.rows())));
    if (s.stddev_[j] == 0.0) s.degenerate_.push_back(j);
  }
  return s;
}

Matrix Standardizer::transform(const Matrix& x) const {
  if (x.cols() != mean_.size() && x.rows() > 0) {
    throw Error("Standardizer::transform: expected " + std::to_string(mean_.size()) +
                " columns, got " + std::to_string(x.cols()));
  }
  Matrix out(x.rows(), mean_.size());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t j = 0; j < mean_.size(); ++j) {
      out(r, j) = (x(r, j) - mean_[j]) / std::max(stddev_[j], epsilon_);
    }
  }
  return out;
}

nlohmann::json Standardizer::to_json() const {
  return {{"kind", "standardizer"},
          {"std_convention", "population"},
          {"feature_names", names_},
          {"mean", mean_},
          {"stddev", stddev_},
          {"epsilon", epsilon_},
          {"fitted_rows", rows_},
          {"degenerate_columns", degenerate_}};
}

Standardizer Standardizer::from_json(const nlohmann::json& j) {
  Standardizer s;
  s.names_ = j.at("feature_names").get<std::vector<std::string>>();
  s.mean_ = j.at("mean").get<std::vector<double>>();
  s.stddev_ = j.at("stddev").get<std::vector<double>>();
  s.epsilon_ = j.at("epsilon").get<double>();
  s.rows_ = j.at("fitted_rows").get<std::size_t>();
  s.degenerate_ = j.at("degenerate_columns").get<std::vector<std::size_t>>();
  if (s.mean_.size() != s.stddev_.size()) throw Error("standardizer JSON: size mismatch");
  return s;
}

}  // namespace flowgate::preprocess
