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

namespace flowgate::sampler {

std::size_t class_quota(std::size_t class_size, const SamplePlan& plan) {
  const std::size_t proportional =
      guarded_floor(plan.fraction * static_cast<double>(class_size));
  const std::size_t wanted =
      std::max<std::size_t>(static_cast<std::size_t>(plan.min_per_class), proportional);
  return std::min(class_size, wanted);
}

SampleResult stratified_sample(const Dataset& d, const SamplePlan& plan) {
  if (!(plan.fraction > 0.0 && plan.fraction <= 1.0)) {
    throw Error("stratified_sample: fraction must lie in (0, 1]");
  }
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw Error("stratified_sample: class '" + d.class_names[c] + "' has no rows");
    }
  }

  SampleResult out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    // The permutation depends only on (seed, class), so a larger fraction
    // takes a longer prefix of the same order.
    Rng rng(derive_seed(plan.seed, c));
    rng.shuffle(rows);
    const std::size_t take = class_quota(rows.size(), plan);
    out.indices.insert(out.indices.end(), rows.begin(), rows.begin() + take);
  }
  std::sort(out.indices.begin(), out.indices.end());
  out.sample = d.subset(out.indices);
  return out;
}

Matrix correlation_matrix(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(r, j);
  }
  for (auto& m : mean) m /= static_cast<double>(std::max<std::size_t>(n, 1));
  Matrix cov(d, d, 0.0);
  std::vector<double> centered(d);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t j = 0; j < d; ++j) centered[j] = x(r, j) - mean[j];
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = a; b < d; ++b) cov(a, b) += centered[a] * centered[b];
    }
  }
  Matrix corr(d, d, 0.0);
  for (std::size_t a = 0; a < d; ++a) {
    corr(a, a) = 1.0;
    for (std::size_t b = a + 1; b < d; ++b) {
      const double denom = std::sqrt(cov(a, a) * cov(b, b));
      const double v = denom > 0.0 ? cov(a, b) / denom : 0.0;
      corr(a, b) = corr(b, a) = v;
    }
  }
  return corr;
}

SampleValidation validate_sample(const Dataset& parent, const Dataset& sample,
                                 double tolerance) {
  if (parent.feature_names != sample.feature_names ||
      parent.class_names != sample.class_names) {
    throw Error("validate_sample: parent and sample schemas differ");
  }
  SampleValidation v;
  v.tolerance = tolerance;
  const std::size_t C = parent.num_classes();
  const std::size_t F = parent.num_features();

  auto proportions = [C](const Dataset& ds) {
    std::vector<double> p(C, 0.0);
    for (ClassId l : ds.labels) p[l] += 1.0;
    for (auto& x : p) x /= static_cast<double>(std::max<std::size_t>(ds.rows(), 1));
    return p;
  };
  const auto pp = proportions(parent);
  const auto ps = proportions(sample);
  for (std::size_t c = 0; c < C; ++c) {
    const double dev = std::abs(ps[c] - pp[c]);
    v.per_class_rate_deviation[static_cast<ClassId>(c)] = dev;
    if (dev > tolerance) v.flagged_classes.push_back(static_cast<ClassId>(c));
  }

  auto class_means = [C, F](const Dataset& ds) {
    Matrix sums(C, F, 0.0);
    std::vector<double> counts(C, 0.0);
    for (std::size_t r = 0; r < ds.rows(); ++r) {
      counts[ds.labels[r]] += 1.0;
      for (std::size_t j = 0; j < F; ++j) sums(ds.labels[r], j) += ds.features(r, j);
    }
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t j = 0; j < F; ++j) {
        sums(c, j) = counts[c] > 0 ? sums(c, j) / counts[c] : 0.0;
      }
    }
    return std::make_pair(sums, counts);
  };
  const auto [mp, cp] = class_means(parent);
  const auto [ms, cs] = class_means(sample);
  v.per_class_feature_mean_relative_diff.assign(F, std::vector<double>(C, 0.0));
  for (std::size_t j = 0; j < F; ++j) {
    double worst = 0.0;
    for (std::size_t c = 0; c < C; ++c) {
      if (cp[c] == 0 || cs[c] == 0) continue;
      const double diff = std::abs(ms(c, j) - mp(c, j));
      const double denom = std::abs(mp(c, j));
      const double rel = (denom > 0.0 ? diff / denom : diff) * 100.0;
      v.per_class_feature_mean_relative_diff[j][c] = rel;
      worst = std::max(worst, rel);
    }
    v.per_feature_mean_relative_diff[parent.feature_names[j]] = worst;
  }

  if (F > 0) {
    const Matrix a = correlation_matrix(parent.features);
    const Matrix b = correlation_matrix(sample.features);
    double fro = 0.0;
    for (std::size_t i = 0; i < a.data().size(); ++i) {
      const double diff = a.data()[i] - b.data()[i];
      fro += diff * diff;
    }
    v.correlation_matrix_distance = std::sqrt(fro) / static_cast<double>(F);
  }
  return v;
}

}  // namespace flowgate::sampler
