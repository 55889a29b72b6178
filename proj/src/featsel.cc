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
#include <numeric>

namespace flowgate::featsel {

const char* to_string(Method m) { return m == Method::kMrmr ? "mrmr" : "chi2"; }

Method parse_method(const std::string& text) {
  if (text == "mrmr") return Method::kMrmr;
  if (text == "chi2") return Method::kChi2;
  throw Error("unknown selection method '" + text + "'");
}

const char* to_string(BinStrategy s) {
  return s == BinStrategy::kEqualFrequency ? "equal-frequency" : "equal-width";
}

Discretizer Discretizer::fit(const Matrix& train, const DiscretizationPlan& plan) {
  if (plan.bins_per_feature < 2) throw Error("Discretizer: need at least 2 bins");
  Discretizer d;
  const std::size_t n = train.rows();
  const int bins = plan.bins_per_feature;
  d.cuts_.resize(train.cols());
  for (std::size_t j = 0; j < train.cols(); ++j) {
    auto col = train.column(j);
    if (col.empty()) continue;
    std::sort(col.begin(), col.end());
    std::vector<double> cuts;
    if (plan.strategy == BinStrategy::kEqualFrequency) {
      for (int b = 1; b < bins; ++b) {
        cuts.push_back(col[static_cast<std::size_t>(b) * n / static_cast<std::size_t>(bins)]);
      }
    } else {
      const double lo = col.front(), hi = col.back();
      for (int b = 1; b < bins; ++b) cuts.push_back(lo + (hi - lo) * b / bins);
    }
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
    // A cut at the minimum would only leave an empty first bin.
    cuts.erase(std::remove_if(cuts.begin(), cuts.end(),
                              [&](double c) { return c <= col.front(); }),
               cuts.end());
    d.cuts_[j] = std::move(cuts);
  }
  return d;
}

std::vector<int> Discretizer::apply(std::span<const double> column,
                                    std::size_t feature) const {
  const auto& cuts = cuts_.at(feature);
  std::vector<int> out(column.size());
  for (std::size_t i = 0; i < column.size(); ++i) {
    out[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), column[i]) -
                              cuts.begin());
  }
  return out;
}

std::vector<std::vector<int>> Discretizer::apply_all(const Matrix& x) const {
  std::vector<std::vector<int>> out(x.cols());
  for (std::size_t j = 0; j < x.cols(); ++j) out[j] = apply(x.column(j), j);
  return out;
}

namespace {

// Dense joint count table of two non-negative discrete sequences.
struct Joint {
  std::size_t nx = 0, ny = 0;
  std::vector<double> counts;
  std::vector<double> row, col;
};

Joint joint_counts(std::span<const int> x, std::span<const int> y) {
  if (x.size() != y.size()) throw Error("length mismatch between sequences");
  if (x.empty()) throw Error("empty sequences");
  Joint j;
  j.nx = static_cast<std::size_t>(*std::max_element(x.begin(), x.end())) + 1;
  j.ny = static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
  j.counts.assign(j.nx * j.ny, 0.0);
  j.row.assign(j.nx, 0.0);
  j.col.assign(j.ny, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < 0 || y[i] < 0) throw Error("discrete values must be non-negative");
    j.counts[static_cast<std::size_t>(x[i]) * j.ny + static_cast<std::size_t>(y[i])] += 1.0;
    j.row[static_cast<std::size_t>(x[i])] += 1.0;
    j.col[static_cast<std::size_t>(y[i])] += 1.0;
  }
  return j;
}

std::vector<int> as_int(std::span<const ClassId> labels) {
  return std::vector<int>(labels.begin(), labels.end());
}

void check_k(std::size_t k, std::size_t features) {
  if (k < 1 || k > features) {
    throw Error("feature selection: k=" + std::to_string(k) + " outside [1, " +
                std::to_string(features) + "]");
  }
}

}  // namespace

double mutual_information(std::span<const int> x, std::span<const int> y) {
  const Joint j = joint_counts(x, y);
  const double n = static_cast<double>(x.size());
  double mi = 0.0;
  for (std::size_t a = 0; a < j.nx; ++a) {
    for (std::size_t b = 0; b < j.ny; ++b) {
      const double c = j.counts[a * j.ny + b];
      if (c == 0) continue;
      mi += (c / n) * std::log(c * n / (j.row[a] * j.col[b]));
    }
  }
  return std::max(0.0, mi);
}

double chi_squared_table(const std::vector<std::vector<double>>& observed) {
  const std::size_t rows = observed.size();
  if (rows == 0) return 0.0;
  const std::size_t cols = observed[0].size();
  std::vector<double> rs(rows, 0.0), cs(cols, 0.0);
  double n = 0.0;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      rs[a] += observed[a][b];
      cs[b] += observed[a][b];
      n += observed[a][b];
    }
  }
  if (n == 0) return 0.0;
  double chi2 = 0.0;
  for (std::size_t a = 0; a < rows; ++a) {
    for (std::size_t b = 0; b < cols; ++b) {
      const double e = rs[a] * cs[b] / n;
      if (e == 0.0) {
        // Marginal-derived E is zero only when the whole row or column is.
        if (observed[a][b] != 0.0) throw Error("chi_squared: observed count with E = 0");
        continue;
      }
      const double d = observed[a][b] - e;
      chi2 += d * d / e;
    }
  }
  return chi2;
}

double chi_squared(std::span<const int> x, std::span<const int> y) {
  const Joint j = joint_counts(x, y);
  std::vector<std::vector<double>> table(j.nx, std::vector<double>(j.ny));
  for (std::size_t a = 0; a < j.nx; ++a) {
    for (std::size_t b = 0; b < j.ny; ++b) table[a][b] = j.counts[a * j.ny + b];
  }
  return chi_squared_table(table);
}

std::vector<std::size_t> retention_counts(std::size_t total,
                                          std::span<const double> fractions) {
  std::vector<std::size_t> out;
  for (double f : fractions) {
    if (!(f > 0.0 && f <= 1.0)) throw Error("retention fraction must lie in (0, 1]");
    std::size_t k = guarded_floor(f * static_cast<double>(total));
    if (total > 0) k = std::clamp<std::size_t>(k, 1, total);
    out.push_back(k);
  }
  return out;
}

SelectionResult select_mrmr(const Dataset& train, std::size_t k,
                            const DiscretizationPlan& plan) {
  const std::size_t F = train.num_features();
  check_k(k, F);
  const auto disc = Discretizer::fit(train.features, plan);
  const auto bins = disc.apply_all(train.features);
  const auto y = as_int(train.labels);

  SelectionResult out;
  out.method = Method::kMrmr;
  out.discretization = plan;
  out.retention_fraction = static_cast<double>(k) / static_cast<double>(F);

  std::vector<double> relevance(F);
  for (std::size_t f = 0; f < F; ++f) {
    relevance[f] = mutual_information(bins[f], y);
    out.relevance[train.feature_names[f]] = relevance[f];
  }
  // redundancy_sum[f] = sum over selected s of I(f; s).
  std::vector<double> redundancy_sum(F, 0.0);
  std::vector<bool> selected(F, false);
  for (std::size_t step = 0; step < k; ++step) {
    std::size_t best = F;
    double best_score = 0.0;
    for (std::size_t f = 0; f < F; ++f) {
      if (selected[f]) continue;
      const double score =
          step == 0 ? relevance[f] : relevance[f] - redundancy_sum[f] / static_cast<double>(step);
      if (best == F || score > best_score + 1e-12) {
        best = f;
        best_score = score;
      }
    }
    selected[best] = true;
    out.retained_indices.push_back(best);
    out.retained.push_back(train.feature_names[best]);
    out.scores[train.feature_names[best]] = best_score;
    if (step + 1 < k) {
      for (std::size_t f = 0; f < F; ++f) {
        if (!selected[f]) redundancy_sum[f] += mutual_information(bins[f], bins[best]);
      }
    }
  }
  return out;
}

SelectionResult select_chi2(const Dataset& train, std::size_t k,
                            const DiscretizationPlan& plan) {
  const std::size_t F = train.num_features();
  check_k(k, F);
  const auto disc = Discretizer::fit(train.features, plan);
  const auto bins = disc.apply_all(train.features);
  const auto y = as_int(train.labels);

  SelectionResult out;
  out.method = Method::kChi2;
  out.discretization = plan;
  out.retention_fraction = static_cast<double>(k) / static_cast<double>(F);
  std::vector<double> stat(F);
  for (std::size_t f = 0; f < F; ++f) {
    stat[f] = chi_squared(bins[f], y);
    out.scores[train.feature_names[f]] = stat[f];
  }
  std::vector<std::size_t> order(F);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return stat[a] > stat[b]; });
  for (std::size_t i = 0; i < k; ++i) {
    out.retained_indices.push_back(order[i]);
    out.retained.push_back(train.feature_names[order[i]]);
  }
  return out;
}

SelectionResult select(Method method, const Dataset& train, double retention_fraction,
                       const DiscretizationPlan& plan) {
  const double f[1] = {retention_fraction};
  const std::size_t k = retention_counts(train.num_features(), f)[0];
  SelectionResult r = method == Method::kMrmr ? select_mrmr(train, k, plan)
                                               : select_chi2(train, k, plan);
  r.retention_fraction = retention_fraction;
  return r;
}

}  // namespace flowgate::featsel
