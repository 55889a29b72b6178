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

#include "flowgate/splitter.h"

#include <algorithm>
#include <set>

#include "flowgate/synth.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::splitter {
namespace {

Dataset skewed(std::uint64_t seed, bool timestamps = false) {
  synth::SynthSpec s;
  s.rows = 5000;
  s.classes = 6;
  s.class_weights = synth::cic_ids2017_weights();
  s.features = 4;
  s.timestamps = timestamps;
  s.seed = seed;
  return synth::generate_synthetic(s);
}

TEST(SplitPlanTest, StandardConfigurations) {
  const auto plans = standard_configurations();
  ASSERT_EQ(plans.size(), 3u);
  EXPECT_EQ(plans[0].name, "40-10-50");
  EXPECT_EQ(plans[1].name, "60-10-30");
  EXPECT_EQ(plans[2].name, "80-10-10");
  EXPECT_DOUBLE_EQ(plans[2].train_fraction, 0.8);
  for (const auto& p : plans) EXPECT_NO_THROW(p.validate());
}

TEST(SplitPlanTest, ParsesCustomPlans) {
  const auto a = parse_plan("70-10-20", SplitMode::kTemporal, 3);
  EXPECT_DOUBLE_EQ(a.train_fraction, 0.7);
  EXPECT_EQ(a.mode, SplitMode::kTemporal);
  EXPECT_EQ(a.seed, 3u);
  EXPECT_DOUBLE_EQ(parse_plan("0.5,0.25,0.25", SplitMode::kStratifiedRandom, 0).test_fraction,
                   0.25);
  EXPECT_THROW(parse_plan("50-10-10", SplitMode::kStratifiedRandom, 0), Error);
  EXPECT_THROW(parse_plan("sixty", SplitMode::kStratifiedRandom, 0), Error);
  EXPECT_THROW(parse_split_mode("random"), Error);
}

// Property over seeds and plans: the three parts partition the rows and each
// class is apportioned by largest remainder.
TEST(StratifiedSplitTest, PartitionsAndApportionsPerClass) {
  const Dataset d = skewed(1);
  for (auto plan : standard_configurations()) {
    for (std::uint64_t seed : {0u, 1u, 2u}) {
      plan.seed = seed;
      const auto s = split(d, plan);
      EXPECT_TRUE(verify_no_overlap(d, s).shared_indices.empty());
      EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), d.rows());
      std::vector<std::array<std::size_t, 3>> got(d.num_classes(), {0, 0, 0});
      for (auto r : s.train) ++got[d.labels[r]][0];
      for (auto r : s.validation) ++got[d.labels[r]][1];
      for (auto r : s.test) ++got[d.labels[r]][2];
      std::vector<std::size_t> n(d.num_classes(), 0);
      for (ClassId l : d.labels) ++n[l];
      const double w[3] = {plan.train_fraction, plan.validation_fraction, plan.test_fraction};
      for (std::size_t c = 0; c < n.size(); ++c) {
        const auto want = apportion(n[c], w);
        EXPECT_EQ(got[c][0], want[0]);
        EXPECT_EQ(got[c][1], want[1]);
        EXPECT_EQ(got[c][2], want[2]);
      }
    }
  }
}

TEST(StratifiedSplitTest, DeterministicPerSeed) {
  const Dataset d = skewed(2);
  auto plan = standard_configurations()[1];
  plan.seed = 17;
  const auto a = split(d, plan), b = split(d, plan);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.test, b.test);
  plan.seed = 18;
  EXPECT_NE(a.train, split(d, plan).train);
}

TEST(StratifiedSplitTest, WarnsOnTinyClass) {
  const Dataset d = testing::make_dataset({{1}, {2}, {3}, {4}, {5}}, {0, 0, 0, 0, 1}, 2);
  const auto s = split(d, standard_configurations()[1]);
  EXPECT_FALSE(s.warnings.empty());
}

TEST(TemporalSplitTest, LaterSplitsNeverPrecedeEarlierOnes) {
  Dataset d = skewed(3, true);
  // Force heavy timestamp ties.
  for (auto& t : *d.timestamps) t /= 50;
  auto plan = standard_configurations()[0];
  plan.mode = SplitMode::kTemporal;
  const auto s = split(d, plan);
  const auto& ts = *d.timestamps;
  auto max_of = [&](const std::vector<std::size_t>& v) {
    std::int64_t m = INT64_MIN;
    for (auto r : v) m = std::max(m, ts[r]);
    return m;
  };
  auto min_of = [&](const std::vector<std::size_t>& v) {
    std::int64_t m = INT64_MAX;
    for (auto r : v) m = std::min(m, ts[r]);
    return m;
  };
  EXPECT_LT(max_of(s.train), min_of(s.validation));
  EXPECT_LT(max_of(s.validation), min_of(s.test));
  EXPECT_EQ(s.train.size() + s.validation.size() + s.test.size(), d.rows());
  EXPECT_TRUE(verify_no_overlap(d, s).shared_indices.empty());
}

TEST(TemporalSplitTest, RequiresTimestamps) {
  auto plan = standard_configurations()[0];
  plan.mode = SplitMode::kTemporal;
  EXPECT_THROW(split(testing::random_dataset(10, 1, 2, 0), plan), Error);
}

TEST(VerifyNoOverlapTest, ReportsSharedIndices) {
  const Dataset d = testing::random_dataset(10, 2, 2, 0);
  SplitIndices s{{0, 1, 2}, {2, 3}, {4, 1}, {}};
  EXPECT_EQ(verify_no_overlap(d, s).shared_indices, (std::vector<std::size_t>{1, 2}));
}

// Quadratic oracle for content duplicates between splits.
TEST(VerifyNoOverlapTest, ContentDuplicatesMatchPairwiseScan) {
  Rng rng(5);
  Dataset d = testing::random_dataset(200, 2, 2, 1);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    d.features(r, 0) = static_cast<double>(rng.uniform_below(8));
    d.features(r, 1) = static_cast<double>(rng.uniform_below(4));
  }
  auto plan = standard_configurations()[1];
  const auto s = split(d, plan);
  const auto report = verify_no_overlap(d, s);
  const std::vector<std::size_t>* parts[3] = {&s.train, &s.validation, &s.test};
  const std::pair<int, int> pairs[3] = {{0, 1}, {0, 2}, {1, 2}};
  for (auto [a, b] : pairs) {
    std::size_t count = 0;
    std::set<std::vector<double>> distinct;
    for (auto i : *parts[a]) {
      for (auto j : *parts[b]) {
        const auto ri = d.features.row(i), rj = d.features.row(j);
        if (std::equal(ri.begin(), ri.end(), rj.begin())) {
          ++count;
          distinct.insert(std::vector<double>(ri.begin(), ri.end()));
        }
      }
    }
    const auto it = std::find_if(report.content_duplicates.begin(),
                                 report.content_duplicates.end(), [&](const DuplicateFinding& f) {
                                   return f.first == static_cast<SplitName>(a) &&
                                          f.second == static_cast<SplitName>(b);
                                 });
    if (count == 0) {
      EXPECT_EQ(it, report.content_duplicates.end());
    } else {
      ASSERT_NE(it, report.content_duplicates.end());
      EXPECT_EQ(it->pair_count, count);
      EXPECT_EQ(it->distinct_rows, distinct.size());
    }
  }
}

}  // namespace
}  // namespace flowgate::splitter
