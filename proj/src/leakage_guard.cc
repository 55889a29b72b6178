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

#include "flowgate/leakage_guard.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

namespace flowgate::leakage {

const char* to_string(Rule r) {
  switch (r) {
    case Rule::kConstant:
      return "constant";
    case Rule::kNearConstant:
      return "near-constant";
    case Rule::kTargetCorrelation:
      return "target-correlation";
    case Rule::kSingleFeatureAuc:
      return "single-feature-auc";
  }
  return "?";
}

const char* to_string(Verdict v) { return v == Verdict::kRemove ? "remove" : "warn"; }

namespace {

// Midranks (1-based) of the values; ties share the average rank.
std::vector<double> midranks(std::span<const double> values,
                             std::vector<std::size_t>* order_out = nullptr) {
  const std::size_t n = values.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n);
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  if (order_out) *order_out = std::move(order);
  return ranks;
}

}  // namespace

double one_vs_rest_auc(std::span<const double> scores, std::span<const ClassId> labels,
                       ClassId positive) {
  const auto ranks = midranks(scores);
  double rank_sum = 0.0, pos = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (labels[i] == positive) {
      rank_sum += ranks[i];
      pos += 1.0;
    }
  }
  const double neg = static_cast<double>(scores.size()) - pos;
  if (pos == 0 || neg == 0) return std::numeric_limits<double>::quiet_NaN();
  return (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg);
}

double point_biserial(std::span<const double> column, std::span<const ClassId> labels,
                      ClassId positive) {
  const double n = static_cast<double>(column.size());
  if (n == 0) return 0.0;
  const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
  double var = 0.0, cov = 0.0, p = 0.0;
  for (std::size_t i = 0; i < column.size(); ++i) p += labels[i] == positive;
  p /= n;
  for (std::size_t i = 0; i < column.size(); ++i) {
    const double dx = column[i] - mean;
    var += dx * dx;
    cov += dx * ((labels[i] == positive ? 1.0 : 0.0) - p);
  }
  var /= n;
  cov /= n;
  const double denom = std::sqrt(var * p * (1.0 - p));
  return denom > 0.0 ? cov / denom : 0.0;
}

FeatureStats feature_stats(std::span<const double> column,
                           std::span<const ClassId> labels, std::size_t num_classes) {
  FeatureStats s;
  const std::size_t n = column.size();
  if (n == 0) return s;
  std::vector<std::size_t> order;
  const auto ranks = midranks(column, &order);

  std::size_t run = 0, best_run = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (i == 0 || column[order[i]] != column[order[i - 1]]) {
      ++s.distinct_values;
      run = 0;
    }
    best_run = std::max(best_run, ++run);
  }
  s.dominant_frequency = static_cast<double>(best_run) / static_cast<double>(n);

  const double mean = std::accumulate(column.begin(), column.end(), 0.0) / n;
  double var = 0.0;
  for (double v : column) var += (v - mean) * (v - mean);
  var /= static_cast<double>(n);

  std::vector<double> rank_sum(num_classes, 0.0), count(num_classes, 0.0),
      centered_sum(num_classes, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    rank_sum[labels[i]] += ranks[i];
    count[labels[i]] += 1.0;
    centered_sum[labels[i]] += column[i] - mean;
  }
  const double total = static_cast<double>(n);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double pos = count[c], neg = total - pos;
    if (pos == 0 || neg == 0) continue;
    const double auc = (rank_sum[c] - pos * (pos + 1.0) / 2.0) / (pos * neg);
    const double oriented = std::max(auc, 1.0 - auc);
    if (s.auc_class < 0 || oriented > s.max_auc) {
      s.max_auc = oriented;
      s.auc_class = static_cast<int>(c);
    }
    // cov(x, 1[y=c]) = sum_{y=c} (x - mean) / n since the indicator's
    // deviations sum to zero against the centered column.
    const double p = pos / total;
    const double denom = std::sqrt(var * p * (1.0 - p));
    const double r = denom > 0.0 ? std::abs(centered_sum[c] / total) / denom : 0.0;
    if (r > s.max_abs_correlation) {
      s.max_abs_correlation = std::min(r, 1.0);
      s.correlation_class = static_cast<int>(c);
    }
  }
  return s;
}

LeakageReport audit_features(const Dataset& train, const AuditThresholds& t,
                             int threads) {
  if (train.rows() == 0) throw Error("audit_features: empty training set");
  const std::size_t F = train.num_features();
  std::vector<std::vector<Finding>> per_feature(F);
  parallel_for(F, threads, [&](std::size_t j) {
    const auto column = train.features.column(j);
    const FeatureStats s = feature_stats(column, train.labels, train.num_classes());
    auto& out = per_feature[j];
    const std::string& name = train.feature_names[j];
    if (s.distinct_values <= 1) {
      out.push_back({name, Rule::kConstant, 1.0, 1.0, Verdict::kRemove, -1});
      return;  // correlation and AUC carry no information for a constant
    }
    if (s.dominant_frequency >= t.near_constant_frequency) {
      out.push_back({name, Rule::kNearConstant, s.dominant_frequency,
                     t.near_constant_frequency,
                     t.near_constant_removes ? Verdict::kRemove : Verdict::kWarn, -1});
    }
    if (s.max_abs_correlation >= t.target_correlation) {
      out.push_back({name, Rule::kTargetCorrelation, s.max_abs_correlation,
                     t.target_correlation, Verdict::kRemove, s.correlation_class});
    } else if (s.max_abs_correlation >= t.target_correlation_warn) {
      out.push_back({name, Rule::kTargetCorrelation, s.max_abs_correlation,
                     t.target_correlation_warn, Verdict::kWarn, s.correlation_class});
    }
    if (s.max_auc >= t.single_feature_auc) {
      out.push_back({name, Rule::kSingleFeatureAuc, s.max_auc, t.single_feature_auc,
                     Verdict::kRemove, s.auc_class});
    } else if (s.max_auc >= t.single_feature_auc_warn) {
      out.push_back({name, Rule::kSingleFeatureAuc, s.max_auc,
                     t.single_feature_auc_warn, Verdict::kWarn, s.auc_class});
    }
  });

  LeakageReport report;
  report.thresholds = t;
  report.rows_audited = train.rows();
  std::set<std::string> removed;
  for (auto& fs : per_feature) {
    for (auto& f : fs) {
      if (f.verdict == Verdict::kRemove) removed.insert(f.feature);
      report.findings.push_back(std::move(f));
    }
  }
  std::stable_sort(report.findings.begin(), report.findings.end(),
                   [](const Finding& a, const Finding& b) {
                     if (a.feature != b.feature) return a.feature < b.feature;
                     return static_cast<int>(a.rule) < static_cast<int>(b.rule);
                   });
  report.removed_features.assign(removed.begin(), removed.end());
  return report;
}

Dataset apply_removals(const Dataset& d, const LeakageReport& report) {
  std::set<std::string> drop;
  for (const auto& name : report.removed_features) {
    if (!d.feature_index(name)) {
      throw Error("apply_removals: unknown feature '" + name + "'");
    }
    drop.insert(name);
  }
  std::vector<std::size_t> keep;
  for (std::size_t j = 0; j < d.num_features(); ++j) {
    if (!drop.count(d.feature_names[j])) keep.push_back(j);
  }
  return d.select_features(keep);
}

}  // namespace flowgate::leakage
