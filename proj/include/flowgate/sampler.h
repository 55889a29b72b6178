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

#ifndef FLOWGATE_SAMPLER_H_
#define FLOWGATE_SAMPLER_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "flowgate/dataset.h"

namespace flowgate::sampler {

struct SamplePlan {
  double fraction = 0.2;
  std::uint64_t min_per_class = 0;
  std::uint64_t seed = 0;
};

struct SampleResult {
  Dataset sample;
  // Ascending parent row indices.
  std::vector<std::size_t> indices;
};

struct SampleValidation {
  // |sample proportion - parent proportion| per class.
  std::map<ClassId, double> per_class_rate_deviation;
  // Per feature: the largest relative difference (percent) of per-class
  // means between sample and parent, over classes present in both.
  std::map<std::string, double> per_feature_mean_relative_diff;
  // [feature][class] percent differences behind the map above. Classes
  // absent from the sample hold 0.
  std::vector<std::vector<double>> per_class_feature_mean_relative_diff;
  // ||corr(sample) - corr(parent)||_F / feature count.
  double correlation_matrix_distance = 0.0;
  double tolerance = 0.0;
  // Classes whose proportion deviation exceeds `tolerance`.
  std::vector<ClassId> flagged_classes;
};

// Rows selected for a class of size n: min(n, max(min_per_class, floor(p n))).
std::size_t class_quota(std::size_t class_size, const SamplePlan& plan);

SampleResult stratified_sample(const Dataset& d, const SamplePlan& plan);

SampleValidation validate_sample(const Dataset& parent, const Dataset& sample,
                                 double tolerance = 0.001);

// Pearson correlation matrix (d x d). Zero-variance columns correlate 0 with
// everything except themselves.
Matrix correlation_matrix(const Matrix& x);

}  // namespace flowgate::sampler

#endif  // FLOWGATE_SAMPLER_H_
