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

#include <cmath>

#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::preprocess {
namespace {

TEST(StandardizerTest, MatchesTwoPassPopulationStatistics) {
  Dataset d = testing::random_dataset(500, 4, 2, 1);
  for (std::size_t r = 0; r < d.rows(); ++r) d.features(r, 1) = 1e6 + d.features(r, 1);
  const auto s = Standardizer::fit(d.features, d.feature_names);
  for (std::size_t j = 0; j < 4; ++j) {
    const auto col = d.features.column(j);
    double mean = 0.0;
    for (double v : col) mean += v;
    mean /= col.size();
    double var = 0.0;
    for (double v : col) var += (v - mean) * (v - mean);
    var /= col.size();
    EXPECT_NEAR(s.mean()[j], mean, 1e-9 * std::max(1.0, std::abs(mean)));
    EXPECT_NEAR(s.stddev()[j], std::sqrt(var), 1e-9);
  }
  const Matrix z = s.transform(d.features);
  for (std::size_t j = 0; j < 4; ++j) {
    double m = 0.0, ss = 0.0;
    for (std::size_t r = 0; r < z.rows(); ++r) m += z(r, j);
    m /= z.rows();
    for (std::size_t r = 0; r < z.rows(); ++r) ss += (z(r, j) - m) * (z(r, j) - m);
    EXPECT_NEAR(m, 0.0, 1e-9);
    EXPECT_NEAR(ss / z.rows(), 1.0, 1e-9);
  }
}

TEST(StandardizerTest, ConstantColumnMapsToZero) {
  const Dataset d = testing::make_dataset({{3, 1}, {3, 2}, {3, 6}}, {0, 1, 0}, 2);
  const auto s = Standardizer::fit(d.features);
  EXPECT_EQ(s.degenerate_columns(), (std::vector<std::size_t>{0}));
  const Matrix z = s.transform(d.features);
  for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(z(r, 0), 0.0);
  EXPECT_TRUE(std::isfinite(s.transform(Matrix(1, 2, 4.0))(0, 0)));
}

// Statistics depend only on the rows passed to fit; changing rows outside the
// fitted set changes nothing.
TEST(StandardizerTest, UsesTrainingRowsOnly) {
  Dataset d = testing::random_dataset(100, 3, 2, 2);
  std::vector<std::size_t> train;
  for (std::size_t i = 0; i < 60; ++i) train.push_back(i);
  const auto a = Standardizer::fit(d.subset(train).features);
  for (std::size_t r = 60; r < 100; ++r) d.features(r, 0) = 1e9;
  const auto b = Standardizer::fit(d.subset(train).features);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.fitted_rows(), 60u);
}

TEST(StandardizerTest, JsonRoundTrip) {
  const Dataset d = testing::random_dataset(20, 3, 2, 3);
  const auto s = Standardizer::fit(d.features, d.feature_names);
  EXPECT_EQ(Standardizer::from_json(nlohmann::json::parse(s.to_json().dump())), s);
}

TEST(StandardizerTest, Errors) {
  EXPECT_THROW(Standardizer::fit(Matrix(1, 2)), Error);
  EXPECT_THROW(Standardizer::fit(Matrix(3, 2), {"a"}), Error);
  const auto s = Standardizer::fit(Matrix(3, 2));
  EXPECT_THROW(s.transform(Matrix(2, 3)), Error);
}

}  // namespace
}  // namespace flowgate::preprocess
