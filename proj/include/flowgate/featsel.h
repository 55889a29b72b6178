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

#ifndef FLOWGATE_FEATSEL_H_
#define FLOWGATE_FEATSEL_H_

#include <map>
#include <span>
#include <string>
#include <vector>

#include "flowgate/dataset.h"

namespace flowgate::featsel {

enum class Method { kMrmr, kChi2 };
enum class BinStrategy { kEqualFrequency, kEqualWidth };

const char* to_string(Method m);
Method parse_method(const std::string& text);
const char* to_string(BinStrategy s);

struct DiscretizationPlan {
  int bins_per_feature = 10;
  BinStrategy strategy = BinStrategy::kEqualFrequency;
};

// Per-column cut points learned from training rows. Bin of x is the number
// of cut points <= x, so bins are 0 .. cuts.size().
class Discretizer {
 public:
  static Discretizer fit(const Matrix& train, const DiscretizationPlan& plan);

  std::vector<int> apply(std::span<const double> column, std::size_t feature) const;
  // Column-major bins for every feature of x.
  std::vector<std::vector<int>> apply_all(const Matrix& x) const;

  const std::vector<std::vector<double>>& cuts() const { return cuts_; }

 private:
  std::vector<std::vector<double>> cuts_;
};

// Plug-in mutual information in nats of two discrete sequences.
double mutual_information(std::span<const int> x, std::span<const int> y);

// Chi-squared statistic of the (x bin, y class) contingency table.
double chi_squared(std::span<const int> x, std::span<const int> y);
double chi_squared_table(const std::vector<std::vector<double>>& observed);

struct SelectionResult {
  Method method = Method::kMrmr;
  // MRMR: pick order. Chi2: descending statistic.
  std::vector<std::string> retained;
  std::vector<std::size_t> retained_indices;
  // MRMR: objective value at the moment each feature was picked.
  // Chi2: statistic of every feature.
  std::map<std::string, double> scores;
  // I(feature; label) for every feature (MRMR only).
  std::map<std::string, double> relevance;
  double retention_fraction = 1.0;
  DiscretizationPlan discretization;
};

// floor(fraction * total), at least 1 when total > 0.
std::vector<std::size_t> retention_counts(std::size_t total,
                                          std::span<const double> fractions);

// Greedy forward MRMR, difference (MID) form. Ties within 1e-12 go to the
// lower feature index. Training rows only.
SelectionResult select_mrmr(const Dataset& train, std::size_t k,
                            const DiscretizationPlan& plan);

SelectionResult select_chi2(const Dataset& train, std::size_t k,
                            const DiscretizationPlan& plan);

SelectionResult select(Method method, const Dataset& train, double retention_fraction,
                       const DiscretizationPlan& plan);

}  // namespace flowgate::featsel

#endif  // FLOWGATE_FEATSEL_H_
