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

#include "flowgate/metrics.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flowgate/synth.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::metrics {
namespace {

double pairwise_auc(const std::vector<double>& s, const std::vector<std::uint8_t>& pos) {
  double wins = 0.0, pairs = 0.0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!pos[i]) continue;
    for (std::size_t j = 0; j < s.size(); ++j) {
      if (pos[j]) continue;
      pairs += 1.0;
      wins += s[i] > s[j] ? 1.0 : (s[i] == s[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

Matrix random_proba(std::size_t n, std::size_t c, Rng& rng, int levels = 0) {
  Matrix p(n, c);
  for (std::size_t r = 0; r < n; ++r) {
    double s = 0.0;
    for (std::size_t k = 0; k < c; ++k) {
      p(r, k) = levels > 0 ? 1.0 + static_cast<double>(rng.uniform_below(levels))
                           : rng.uniform01() + 1e-3;
      s += p(r, k);
    }
    for (std::size_t k = 0; k < c; ++k) p(r, k) /= s;
  }
  return p;
}

TEST(ConfusionMatrixTest, HandCounts) {
  const std::vector<ClassId> truth = {0, 0, 1}, pred = {0, 1, 1};
  const auto cm = confusion_matrix(truth, pred, 2);
  EXPECT_EQ(cm.counts, (std::vector<std::vector<std::uint64_t>>{{1, 1}, {0, 1}}));
  EXPECT_EQ(cm.total(), 3u);
  EXPECT_EQ(cm.row_sum(0), 2u);
  EXPECT_EQ(cm.col_sum(1), 2u);
  const auto diag = confusion_matrix(truth, truth, 2);
  EXPECT_EQ(diag.counts[0][1] + diag.counts[1][0], 0u);
  EXPECT_THROW(confusion_matrix(truth, std::vector<ClassId>{0, 2, 1}, 2), Error);
  EXPECT_THROW(confusion_matrix(truth, std::vector<ClassId>{0}, 2), Error);
}

TEST(ConfusionMatrixTest, BenignRowPerClassAccuracy) {
  ConfusionMatrix cm;
  cm.counts = {{38856, 25}, {3, 997}};
  EXPECT_NEAR(cm.per_class_accuracy(0), 38856.0 / 38881.0, 1e-15);
  EXPECT_NEAR(cm.per_class_accuracy(0), 0.99936, 5e-6);
  const auto back = ConfusionMatrix::from_json(cm.to_json());
  EXPECT_EQ(back.counts, cm.counts);
}

TEST(ClassificationMetricsTest, HandEvaluatedTwoByTwo) {
  ConfusionMatrix cm;
  cm.counts = {{1, 1}, {0, 1}};
  const auto m = classification_metrics(cm);
  EXPECT_DOUBLE_EQ(m.precision[0], 1.0);
  EXPECT_DOUBLE_EQ(m.precision[1], 0.5);
  EXPECT_DOUBLE_EQ(m.recall[0], 0.5);
  EXPECT_DOUBLE_EQ(m.recall[1], 1.0);
  EXPECT_NEAR(m.f1[0], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.f1[1], 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.f1_macro, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(m.accuracy, 2.0 / 3.0, 1e-15);
}

TEST(ClassificationMetricsTest, DegenerateAndZeroSupport) {
  ConfusionMatrix single;
  single.counts = {{5}};
  const auto a = classification_metrics(single);
  EXPECT_EQ(a.accuracy, 1.0);
  EXPECT_EQ(a.f1_weighted, 1.0);
  ConfusionMatrix gap;
  gap.counts = {{3, 0, 1}, {0, 0, 0}, {0, 0, 4}};
  const auto b = classification_metrics(gap);
  EXPECT_EQ(b.excluded_from_macro, (std::vector<std::size_t>{1}));
  EXPECT_EQ(b.f1[1], 0.0);
  EXPECT_NEAR(b.f1_macro, (b.f1[0] + b.f1[2]) / 2.0, 1e-15);
}

// Properties on random matrices: accuracy is trace / total and weighted F1
// lies between the extreme per-class F1 values.
TEST(ClassificationMetricsTest, RandomMatrixInvariants) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    ConfusionMatrix cm;
    const std::size_t c = 2 + rng.uniform_below(4);
    cm.counts.assign(c, std::vector<std::uint64_t>(c));
    std::uint64_t trace = 0, total = 0;
    for (std::size_t i = 0; i < c; ++i) {
      for (std::size_t j = 0; j < c; ++j) {
        cm.counts[i][j] = rng.uniform_below(i == j ? 50 : 10) + (i == j);
        total += cm.counts[i][j];
        if (i == j) trace += cm.counts[i][j];
      }
    }
    const auto m = classification_metrics(cm);
    EXPECT_NEAR(m.accuracy, static_cast<double>(trace) / total, 1e-15);
    const auto [lo, hi] = std::minmax_element(m.f1.begin(), m.f1.end());
    EXPECT_GE(m.f1_weighted, *lo - 1e-12);
    EXPECT_LE(m.f1_weighted, *hi + 1e-12);
  }
}

TEST(BinaryAucTest, MatchesPairwiseOracle) {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 10;
    std::vector<double> s(n);
    std::vector<std::uint8_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = trial % 2 ? rng.uniform01() : static_cast<double>(rng.uniform_below(4));
      pos[i] = rng.uniform01() < 0.4;
    }
    const bool defined = std::count(pos.begin(), pos.end(), 1) > 0 &&
                         std::count(pos.begin(), pos.end(), 0) > 0;
    if (!defined) {
      EXPECT_TRUE(std::isnan(binary_auc(s, pos)));
      continue;
    }
    EXPECT_NEAR(binary_auc(s, pos), pairwise_auc(s, pos), 1e-12);
  }
}

TEST(RocAucTest, PerfectAndConstantScores) {
  const std::vector<ClassId> y = {0, 1, 2, 0, 1, 2};
  Matrix perfect(6, 3, 0.0);
  for (std::size_t r = 0; r < 6; ++r) perfect(r, y[r]) = 1.0;
  const auto a = roc_auc_ovr(y, perfect);
  for (double v : a.per_class) EXPECT_EQ(v, 1.0);
  EXPECT_EQ(a.micro, 1.0);
  EXPECT_EQ(a.macro, 1.0);
  const auto b = roc_auc_ovr(y, Matrix(6, 3, 1.0 / 3.0));
  for (double v : b.per_class) EXPECT_EQ(v, 0.5);
  EXPECT_EQ(b.micro, 0.5);
}

TEST(RocAucTest, PerClassMatchesPairwiseAndMicroFlattens) {
  Rng rng(3);
  const std::size_t n = 10, c = 3;
  std::vector<ClassId> y(n);
  for (std::size_t i = 0; i < n; ++i) y[i] = static_cast<ClassId>(i % c);
  const Matrix p = random_proba(n, c, rng, 3);
  const auto r = roc_auc_ovr(y, p);
  std::vector<double> flat_s;
  std::vector<std::uint8_t> flat_y;
  for (std::size_t k = 0; k < c; ++k) {
    std::vector<double> s(n);
    std::vector<std::uint8_t> pos(n);
    for (std::size_t i = 0; i < n; ++i) {
      s[i] = p(i, k);
      pos[i] = y[i] == k;
      flat_s.push_back(s[i]);
      flat_y.push_back(pos[i]);
    }
    EXPECT_NEAR(r.per_class[k], pairwise_auc(s, pos), 1e-12);
  }
  EXPECT_NEAR(r.micro, pairwise_auc(flat_s, flat_y), 1e-12);
  EXPECT_NEAR(r.macro, (r.per_class[0] + r.per_class[1] + r.per_class[2]) / 3.0, 1e-12);
}

TEST(RocAucTest, UndefinedClassExcludedFromMacro) {
  const std::vector<ClassId> y = {0, 1, 0, 1};
  Rng rng(4);
  const Matrix p = random_proba(4, 3, rng);
  const auto r = roc_auc_ovr(y, p);
  EXPECT_EQ(r.undefined_classes, (std::vector<std::size_t>{2}));
  EXPECT_TRUE(std::isnan(r.per_class[2]));
  EXPECT_NEAR(r.macro, (r.per_class[0] + r.per_class[1]) / 2.0, 1e-12);
}

TEST(RocAucTest, InvariantUnderMonotoneTransform) {
  Rng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> s(50), t(50);
    std::vector<std::uint8_t> pos(50);
    for (std::size_t i = 0; i < 50; ++i) {
      s[i] = rng.uniform01();
      t[i] = std::exp(3.0 * s[i]) - 7.0;
      pos[i] = i % 3 == 0;
    }
    EXPECT_NEAR(binary_auc(s, pos), binary_auc(t, pos), 1e-15);
  }
}

// Identical score distributions per class with equal supports: the flattened
// micro AUC equals the shared per-class value.
TEST(RocAucTest, MicroEqualsCommonPerClassValue) {
  const std::size_t c = 3;
  const std::vector<double> pos_scores = {0.9, 0.6, 0.4}, neg_scores = {0.5, 0.3, 0.2};
  std::vector<ClassId> y;
  std::vector<std::vector<double>> rows;
  for (std::size_t k = 0; k < c; ++k) {
    for (std::size_t i = 0; i < pos_scores.size(); ++i) {
      std::vector<double> row(c);
      for (std::size_t j = 0; j < c; ++j) row[j] = j == k ? pos_scores[i] : neg_scores[i];
      rows.push_back(row);
      y.push_back(static_cast<ClassId>(k));
    }
  }
  const Matrix p = testing::make_dataset(rows, y, c).features;
  const auto r = roc_auc_ovr(y, p);
  for (double v : r.per_class) EXPECT_NEAR(v, r.per_class[0], 1e-15);
  EXPECT_NEAR(r.micro, r.per_class[0], 1e-15);
}

TEST(MetricNameTest, RoundTrip) {
  for (Metric m : {Metric::kF1Macro, Metric::kAccuracy, Metric::kF1Weighted,
                   Metric::kRocAucMacro}) {
    EXPECT_EQ(parse_metric(to_string(m)), m);
  }
  EXPECT_THROW(parse_metric("mcc"), Error);
}

TEST(EvaluateTest, BundleAndJson) {
  Rng rng(6);
  std::vector<ClassId> y(60);
  for (std::size_t i = 0; i < 60; ++i) y[i] = static_cast<ClassId>(i % 3);
  const Matrix p = random_proba(60, 3, rng);
  const auto b = evaluate(y, p, {"a", "b", "c"});
  EXPECT_EQ(b.confusion.total(), 60u);
  EXPECT_EQ(b.roc_auc_per_class.size(), 3u);
  EXPECT_DOUBLE_EQ(b.value(Metric::kF1Macro), b.f1_macro);
  EXPECT_DOUBLE_EQ(b.value(Metric::kRocAucMacro), b.roc_auc_macro);
  const auto back = MetricBundle::from_json(nlohmann::json::parse(b.to_json().dump()));
  EXPECT_DOUBLE_EQ(back.f1_macro, b.f1_macro);
  EXPECT_EQ(back.roc_auc_per_class, b.roc_auc_per_class);
  EXPECT_FALSE(b.to_json(false).contains("training_time_s"));
}

TEST(StudentTTest, TableValues) {
  EXPECT_NEAR(student_t_quantile(0.975, 4), 2.776, 5e-4);
  EXPECT_NEAR(student_t_quantile(0.975, 4), 2.7764451051977987, 1e-9);
  EXPECT_NEAR(student_t_quantile(0.975, 9), 2.262, 5e-4);
  EXPECT_NEAR(student_t_quantile(0.95, 1), 6.314, 5e-4);
}

TEST(SummarizeFoldsTest, HandEvaluatedInterval) {
  const auto s = summarize_folds({0.9, 0.92, 0.94, 0.96, 0.98});
  EXPECT_NEAR(s.mean, 0.94, 1e-15);
  // Deviations -0.04 .. 0.04; sum of squares 0.004; sample variance 0.001.
  const double sd = std::sqrt(0.001);
  EXPECT_NEAR(s.stddev, sd, 1e-12);
  EXPECT_NEAR(s.ci_half_width, 2.776 * sd / std::sqrt(5.0), 5e-4 * sd / std::sqrt(5.0));
  const auto flat = summarize_folds({0.8, 0.8, 0.8, 0.8, 0.8});
  EXPECT_DOUBLE_EQ(flat.mean, 0.8);
  EXPECT_DOUBLE_EQ(flat.ci_half_width, 0.0);
}

// For a fixed sample standard deviation the half-width is t * s / sqrt(k);
// dividing out t leaves the 1/sqrt(k) law.
TEST(SummarizeFoldsTest, HalfWidthScalesWithInverseRootK) {
  for (std::size_t k : {3u, 5u, 10u, 20u}) {
    std::vector<double> scores(k);
    for (std::size_t i = 0; i < k; ++i) scores[i] = i % 2 ? 1.0 : 0.0;
    const auto s = summarize_folds(scores);
    EXPECT_NEAR(s.ci_half_width / s.t_quantile, s.stddev / std::sqrt(double(k)), 1e-12);
  }
  const auto back = CvSummary::from_json(summarize_folds({0.1, 0.2, 0.4}).to_json());
  EXPECT_EQ(back.fold_scores.size(), 3u);
}

TEST(StratifiedFoldsTest, ProportionsWithinOneOverFoldSize) {
  synth::SynthSpec spec;
  spec.rows = 3000;
  spec.classes = 6;
  spec.class_weights = synth::cic_ids2017_weights();
  spec.features = 2;
  const Dataset d = synth::generate_synthetic(spec);
  const std::size_t k = 5;
  const auto ids = stratified_fold_ids(d.labels, 6, k, 7);
  std::vector<std::vector<double>> per(k, std::vector<double>(6, 0.0));
  std::vector<double> size(k, 0.0), global(6, 0.0);
  for (std::size_t i = 0; i < ids.size(); ++i) {
    ASSERT_LT(ids[i], k);
    per[ids[i]][d.labels[i]] += 1.0;
    size[ids[i]] += 1.0;
    global[d.labels[i]] += 1.0 / ids.size();
  }
  const auto [lo, hi] = std::minmax_element(size.begin(), size.end());
  EXPECT_LE(*hi - *lo, 1.0);
  for (std::size_t f = 0; f < k; ++f) {
    for (std::size_t c = 0; c < 6; ++c) {
      EXPECT_LE(std::abs(per[f][c] / size[f] - global[c]), 1.0 / size[f]);
    }
  }
  EXPECT_EQ(ids, stratified_fold_ids(d.labels, 6, k, 7));
}

TEST(KFoldCvTest, RunsAndWarnsOnSmallClasses) {
  synth::SynthSpec spec;
  spec.rows = 400;
  spec.classes = 3;
  spec.class_weights = {0.6, 0.39, 0.01};
  spec.features = 4;
  const Dataset d = synth::generate_synthetic(spec);
  models::ModelSpec m;
  m.family = models::Family::kLogistic;
  CvOptions o;
  o.k = 5;
  const auto s = stratified_kfold_cv(d, m, o);
  EXPECT_EQ(s.fold_scores.size(), 5u);
  EXPECT_EQ(s.metric, "f1_macro");
  for (double v : s.fold_scores) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
  const auto again = stratified_kfold_cv(d, m, o);
  EXPECT_EQ(again.fold_scores, s.fold_scores);
  if (std::count(d.labels.begin(), d.labels.end(), 2u) < 5) {
    EXPECT_FALSE(s.warnings.empty());
  }
  o.k = 1;
  EXPECT_THROW(stratified_kfold_cv(d, m, o), Error);
}

TEST(SelectBestAlgorithmTest, ArithmeticMeanWins) {
  std::vector<Cell> cells;
  const char* configs[3] = {"40-10-50", "60-10-30", "80-10-10"};
  const double a[3] = {0.9, 0.9, 0.9}, b[3] = {0.8, 1.0, 0.89};
  for (int i = 0; i < 3; ++i) {
    cells.push_back({configs[i], "A", a[i], 0.9, 1.0});
    cells.push_back({configs[i], "B", b[i], 0.9, 1.0});
  }
  const auto s = select_best_algorithm(cells);
  EXPECT_EQ(s.winner, "A");
  EXPECT_NEAR(s.ranking[1].mean_f1_macro, 0.8966666666666666, 1e-12);
  EXPECT_EQ(s.best_configuration, "40-10-50");
}

TEST(SelectBestAlgorithmTest, TieBreaks) {
  const std::vector<Cell> single = {{"x", "only", 0.5, 0.5, 1.0}};
  EXPECT_EQ(select_best_algorithm(single).winner, "only");
  const std::vector<Cell> auc = {{"x", "A", 0.9, 0.95, 5.0}, {"x", "B", 0.9, 0.94, 1.0}};
  EXPECT_EQ(select_best_algorithm(auc).winner, "A");
  const std::vector<Cell> time = {{"x", "A", 0.9, 0.95, 5.0}, {"x", "B", 0.9, 0.95, 1.0}};
  EXPECT_EQ(select_best_algorithm(time).winner, "B");
}

TEST(SelectBestAlgorithmTest, MissingCells) {
  const std::vector<Cell> cells = {
      {"x", "A", 0.9, 0.9, 1.0}, {"y", "A", 0.9, 0.9, 1.0}, {"x", "B", 0.95, 0.9, 1.0}};
  EXPECT_THROW(select_best_algorithm(cells), Error);
  const auto s = select_best_algorithm(cells, true);
  EXPECT_EQ(s.winner, "B");
  EXPECT_EQ(s.missing_cells.size(), 1u);
  EXPECT_THROW(select_best_algorithm({}), Error);
}

}  // namespace
}  // namespace flowgate::metrics
