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

#include "flowgate/featsel.h"

#include <algorithm>
#include <cmath>
#include <map>

#include "flowgate/synth.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::featsel {
namespace {

// I(X;Y) = H(X) + H(Y) - H(X,Y), computed from maps.
double entropy_mi(const std::vector<int>& x, const std::vector<int>& y) {
  std::map<int, double> px, py;
  std::map<std::pair<int, int>, double> pxy;
  const double n = static_cast<double>(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    px[x[i]] += 1.0 / n;
    py[y[i]] += 1.0 / n;
    pxy[{x[i], y[i]}] += 1.0 / n;
  }
  auto h = [](const auto& m) {
    double s = 0.0;
    for (const auto& [k, p] : m) s -= p * std::log(p);
    return s;
  };
  return h(px) + h(py) - h(pxy);
}

TEST(MutualInformationTest, MatchesEntropyIdentity) {
  Rng rng(1);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<int> x(200), y(200);
    for (std::size_t i = 0; i < 200; ++i) {
      x[i] = static_cast<int>(rng.uniform_below(5));
      y[i] = rng.uniform01() < 0.6 ? x[i] % 3 : static_cast<int>(rng.uniform_below(3));
    }
    EXPECT_NEAR(mutual_information(x, y), entropy_mi(x, y), 1e-10);
  }
  const std::vector<int> a = {0, 1, 0, 1};
  EXPECT_NEAR(mutual_information(a, a), std::log(2.0), 1e-12);
  EXPECT_THROW(mutual_information(a, std::vector<int>{0, 1}), Error);
}

TEST(MutualInformationTest, HandEvaluatedJointCounts) {
  // Counts {(0,0):4, (0,1):1, (1,0):1, (1,1):4}; every marginal is 1/2.
  const std::vector<int> x = {0, 0, 0, 0, 0, 1, 1, 1, 1, 1};
  const std::vector<int> y = {0, 0, 0, 0, 1, 0, 1, 1, 1, 1};
  const double expect = 2 * 0.4 * std::log(0.4 / 0.25) + 2 * 0.1 * std::log(0.1 / 0.25);
  EXPECT_NEAR(mutual_information(x, y), expect, 1e-12);
  EXPECT_NEAR(mutual_information(y, x), expect, 1e-12);
  const std::vector<int> flat(10, 0);
  EXPECT_EQ(mutual_information(flat, y), 0.0);
}

TEST(ChiSquaredTest, HandComputedTable) {
  // E = 5 everywhere, four cells of 25 / 5.
  EXPECT_NEAR(chi_squared_table({{10, 0}, {0, 10}}), 20.0, 1e-12);
  // n (ad - bc)^2 / (row1 row2 col1 col2) for a 2x2 table.
  const double expect = 100.0 * (10 * 40 - 20 * 30) * (10 * 40 - 20 * 30) /
                        (30.0 * 70.0 * 40.0 * 60.0);
  EXPECT_NEAR(chi_squared_table({{10, 20}, {30, 40}}), expect, 1e-12);
  EXPECT_NEAR(chi_squared_table({{10, 20}, {30, 40}}), 0.7936507936507936, 1e-12);
  // Independent table.
  EXPECT_NEAR(chi_squared_table({{5, 10}, {10, 20}}), 0.0, 1e-12);
  // An empty row contributes nothing.
  EXPECT_NEAR(chi_squared_table({{10, 20}, {0, 0}, {30, 40}}), expect, 1e-12);
  const std::vector<int> x = {0, 0, 1, 1}, y = {0, 1, 0, 1};
  EXPECT_NEAR(chi_squared(x, y), 0.0, 1e-12);
  const std::vector<int> z = {0, 0, 1, 1};
  EXPECT_NEAR(chi_squared(x, z), 4.0, 1e-12);
}

TEST(RetentionTest, FortyNineFeatures) {
  const double f[3] = {0.7, 0.5, 0.3};
  EXPECT_EQ(retention_counts(49, f), (std::vector<std::size_t>{34, 24, 14}));
  const double tiny[1] = {0.01};
  EXPECT_EQ(retention_counts(10, tiny), (std::vector<std::size_t>{1}));
  const double bad[1] = {1.5};
  EXPECT_THROW(retention_counts(10, bad), Error);
}

TEST(DiscretizerTest, EqualFrequencyAndWidth) {
  Matrix x(10, 1);
  for (std::size_t i = 0; i < 10; ++i) x(i, 0) = static_cast<double>(i);
  DiscretizationPlan p;
  p.bins_per_feature = 5;
  const auto d = Discretizer::fit(x, p);
  EXPECT_EQ(d.cuts()[0], (std::vector<double>{2, 4, 6, 8}));
  const auto bins = d.apply(x.column(0), 0);
  EXPECT_EQ(bins, (std::vector<int>{0, 0, 1, 1, 2, 2, 3, 3, 4, 4}));
  p.strategy = BinStrategy::kEqualWidth;
  p.bins_per_feature = 3;
  const auto w = Discretizer::fit(x, p);
  EXPECT_EQ(w.cuts()[0], (std::vector<double>{3, 6}));
  p.bins_per_feature = 1;
  EXPECT_THROW(Discretizer::fit(x, p), Error);
}

Dataset redundant_dataset() {
  synth::SynthSpec s;
  s.rows = 1500;
  s.classes = 3;
  s.features = 6;
  s.separation = 1.0;
  s.seed = 3;
  Dataset d = synth::generate_synthetic(s);
  // Append near-copies of f00 so redundancy matters.
  Rng rng(4);
  Dataset out;
  out.class_names = d.class_names;
  out.labels = d.labels;
  out.feature_names = d.feature_names;
  out.feature_names.push_back("dup_a");
  out.feature_names.push_back("dup_b");
  out.features = Matrix(d.rows(), d.num_features() + 2);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t j = 0; j < d.num_features(); ++j) out.features(r, j) = d.features(r, j);
    out.features(r, 6) = d.features(r, 0) + 0.01 * rng.normal();
    out.features(r, 7) = d.features(r, 0) + 0.01 * rng.normal();
  }
  return out;
}

// Independent greedy: at each step every remaining feature is scored with
// the entropy-identity MI on the same bins.
TEST(MrmrTest, MatchesBruteForceGreedy) {
  const Dataset d = redundant_dataset();
  const DiscretizationPlan plan;
  const auto bins = Discretizer::fit(d.features, plan).apply_all(d.features);
  const std::vector<int> y(d.labels.begin(), d.labels.end());
  const std::size_t F = d.num_features();
  for (std::size_t k = 1; k <= F; ++k) {
    std::vector<std::size_t> chosen;
    std::vector<bool> used(F, false);
    while (chosen.size() < k) {
      std::size_t best = F;
      double best_score = 0.0;
      for (std::size_t f = 0; f < F; ++f) {
        if (used[f]) continue;
        double red = 0.0;
        for (auto s : chosen) red += entropy_mi(bins[f], bins[s]);
        const double score =
            entropy_mi(bins[f], y) - (chosen.empty() ? 0.0 : red / chosen.size());
        if (best == F || score > best_score + 1e-9) best = f, best_score = score;
      }
      used[best] = true;
      chosen.push_back(best);
    }
    const auto r = select_mrmr(d, k, plan);
    EXPECT_EQ(r.retained_indices, chosen) << "k=" << k;
  }
}

TEST(MrmrTest, TwinIsPenalizedInFavourOfIndependentFeature) {
  // f0 and f1 are the same informative feature; f2 carries independent
  // information about the label.
  std::vector<std::vector<double>> rows;
  std::vector<ClassId> y;
  for (int a = 0; a < 2; ++a) {
    for (int b = 0; b < 2; ++b) {
      for (int rep = 0; rep < 25; ++rep) {
        rows.push_back({double(a), double(a), double(b)});
        y.push_back(static_cast<ClassId>(2 * a + b));
      }
    }
  }
  const Dataset d = testing::make_dataset(rows, y, 4);
  DiscretizationPlan plan;
  plan.bins_per_feature = 2;
  const auto r = select_mrmr(d, 2, plan);
  EXPECT_EQ(r.retained_indices, (std::vector<std::size_t>{0, 2}));
  // k = feature count gives a permutation.
  auto all = select_mrmr(d, 3, plan).retained_indices;
  std::sort(all.begin(), all.end());
  EXPECT_EQ(all, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Chi2Test, PicksOneHotIndicator) {
  Dataset d = testing::random_dataset(400, 4, 3, 21);
  for (std::size_t r = 0; r < d.rows(); ++r) d.features(r, 2) = d.labels[r] == 1 ? 1.0 : 0.0;
  EXPECT_EQ(select_chi2(d, 1, DiscretizationPlan{}).retained,
            (std::vector<std::string>{"f2"}));
}

TEST(MrmrTest, AvoidsRedundantCopies) {
  const Dataset d = redundant_dataset();
  const auto r = select_mrmr(d, 3, DiscretizationPlan{});
  int copies = 0;
  for (const auto& name : r.retained) copies += name == "f00" || name.rfind("dup_", 0) == 0;
  EXPECT_LE(copies, 1);
  EXPECT_EQ(r.relevance.size(), d.num_features());
}

TEST(Chi2Test, RanksByStatistic) {
  const Dataset d = redundant_dataset();
  const auto r = select_chi2(d, 4, DiscretizationPlan{});
  ASSERT_EQ(r.retained.size(), 4u);
  for (std::size_t i = 1; i < r.retained.size(); ++i) {
    EXPECT_GE(r.scores.at(r.retained[i - 1]), r.scores.at(r.retained[i]));
  }
  for (const auto& [name, s] : r.scores) {
    if (std::find(r.retained.begin(), r.retained.end(), name) == r.retained.end()) {
      EXPECT_LE(s, r.scores.at(r.retained.back()));
    }
  }
}

TEST(SelectTest, FractionToCountAndErrors) {
  const Dataset d = redundant_dataset();
  const auto r = select(Method::kMrmr, d, 0.5, DiscretizationPlan{});
  EXPECT_EQ(r.retained.size(), 4u);
  EXPECT_DOUBLE_EQ(r.retention_fraction, 0.5);
  EXPECT_THROW(select_chi2(d, 0, DiscretizationPlan{}), Error);
  EXPECT_THROW(select_mrmr(d, 9, DiscretizationPlan{}), Error);
  EXPECT_THROW(parse_method("pca"), Error);
  EXPECT_EQ(select(Method::kChi2, d, 0.5, {}).retained,
            select(Method::kChi2, d, 0.5, {}).retained);
}

}  // namespace
}  // namespace flowgate::featsel
