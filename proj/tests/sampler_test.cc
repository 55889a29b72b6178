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

#include "flowgate/sampler.h"

#include <algorithm>
#include <cmath>
#include <set>

#include "flowgate/synth.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::sampler {
namespace {

Dataset skewed(std::uint64_t seed) {
  synth::SynthSpec s;
  s.rows = 20000;
  s.classes = 6;
  s.class_weights = synth::cic_ids2017_weights();
  s.features = 5;
  s.seed = seed;
  return synth::generate_synthetic(s);
}

std::vector<std::size_t> counts(const Dataset& d) {
  std::vector<std::size_t> c(d.num_classes(), 0);
  for (ClassId l : d.labels) ++c[l];
  return c;
}

TEST(ClassQuotaTest, FloorWithMinimumAndCap) {
  SamplePlan p;
  p.fraction = 0.2;
  EXPECT_EQ(class_quota(100, p), 20u);
  EXPECT_EQ(class_quota(104, p), 20u);
  EXPECT_EQ(class_quota(4, p), 0u);
  p.min_per_class = 10;
  EXPECT_EQ(class_quota(4, p), 4u);
  EXPECT_EQ(class_quota(30, p), 10u);
  p.fraction = 0.29;
  p.min_per_class = 0;
  EXPECT_EQ(class_quota(100, p), 29u);
}

TEST(StratifiedSampleTest, PerClassCountsMatchQuota) {
  const Dataset d = skewed(1);
  SamplePlan p;
  p.fraction = 0.2;
  p.seed = 9;
  const auto r = stratified_sample(d, p);
  const auto parent = counts(d), got = counts(r.sample);
  for (std::size_t c = 0; c < parent.size(); ++c) {
    EXPECT_EQ(got[c], parent[c] / 5) << "class " << c;
  }
  EXPECT_TRUE(std::is_sorted(r.indices.begin(), r.indices.end()));
  EXPECT_EQ(std::set<std::size_t>(r.indices.begin(), r.indices.end()).size(), r.indices.size());
  for (std::size_t i = 0; i < r.indices.size(); ++i) {
    EXPECT_EQ(r.sample.labels[i], d.labels[r.indices[i]]);
  }
}

// Flooring per class moves each proportion by at most (C - 1) / sample size
// away from the parent, far under 0.1% at this size.
TEST(StratifiedSampleTest, ProportionsPreserved) {
  const Dataset d = skewed(2);
  SamplePlan p;
  p.fraction = 0.2;
  const auto r = stratified_sample(d, p);
  const auto v = validate_sample(d, r.sample);
  const double bound = static_cast<double>(d.num_classes()) / r.sample.rows();
  for (const auto& [c, dev] : v.per_class_rate_deviation) EXPECT_LE(dev, bound);
  EXPECT_TRUE(v.flagged_classes.empty());
  EXPECT_LT(v.correlation_matrix_distance, 0.05);
}

TEST(StratifiedSampleTest, DeterministicAndNested) {
  const Dataset d = skewed(3);
  SamplePlan p;
  p.seed = 4;
  p.fraction = 0.1;
  const auto a = stratified_sample(d, p);
  EXPECT_EQ(a.indices, stratified_sample(d, p).indices);
  p.fraction = 0.3;
  const auto b = stratified_sample(d, p);
  EXPECT_TRUE(std::includes(b.indices.begin(), b.indices.end(), a.indices.begin(),
                            a.indices.end()));
  p.seed = 5;
  EXPECT_NE(b.indices, stratified_sample(d, p).indices);
}

TEST(StratifiedSampleTest, RejectsBadInput) {
  const Dataset d = testing::make_dataset({{1}, {2}}, {0, 0}, 2);
  SamplePlan p;
  EXPECT_THROW(stratified_sample(d, p), Error);  // class c1 is empty
  p.fraction = 0.0;
  EXPECT_THROW(stratified_sample(testing::random_dataset(10, 1, 1, 0), p), Error);
}

TEST(ValidateSampleTest, IdentitySampleHasNoDeviation) {
  const Dataset d = testing::random_dataset(300, 4, 3, 7);
  const auto v = validate_sample(d, d);
  for (const auto& [c, dev] : v.per_class_rate_deviation) EXPECT_EQ(dev, 0.0);
  for (const auto& [f, diff] : v.per_feature_mean_relative_diff) EXPECT_EQ(diff, 0.0);
  EXPECT_EQ(v.correlation_matrix_distance, 0.0);
}

TEST(ValidateSampleTest, HandComputedMeanDifference) {
  const Dataset parent = testing::make_dataset({{2}, {4}, {10}, {10}}, {0, 0, 1, 1}, 2);
  const Dataset sample = testing::make_dataset({{2}, {10}}, {0, 1}, 2);
  const auto v = validate_sample(parent, sample);
  // Class 0 mean 3 -> 2 is 33.3%; class 1 unchanged.
  EXPECT_NEAR(v.per_class_feature_mean_relative_diff[0][0], 100.0 / 3.0, 1e-12);
  EXPECT_EQ(v.per_class_feature_mean_relative_diff[0][1], 0.0);
  EXPECT_NEAR(v.per_feature_mean_relative_diff.at("f0"), 100.0 / 3.0, 1e-12);
}

TEST(CorrelationMatrixTest, MatchesDirectPearson) {
  const Dataset d = testing::random_dataset(50, 3, 2, 8);
  Matrix x = d.features;
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 1) = 0.5 * x(r, 0) + x(r, 1);
  for (std::size_t r = 0; r < x.rows(); ++r) x(r, 2) = 4.0;
  const Matrix c = correlation_matrix(x);
  const auto a = x.column(0), b = x.column(1);
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) ma += a[i], mb += b[i];
  ma /= a.size();
  mb /= b.size();
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  EXPECT_NEAR(c(0, 1), sab / std::sqrt(saa * sbb), 1e-12);
  EXPECT_EQ(c(0, 2), 0.0);
  EXPECT_EQ(c(2, 2), 1.0);
}

}  // namespace
}  // namespace flowgate::sampler
