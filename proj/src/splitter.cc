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
#include <bit>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>

namespace flowgate::splitter {

std::string to_string(SplitMode mode) {
  return mode == SplitMode::kTemporal ? "temporal" : "stratified";
}

SplitMode parse_split_mode(const std::string& text) {
  if (text == "temporal") return SplitMode::kTemporal;
  if (text == "stratified" || text == "stratified-random") {
    return SplitMode::kStratifiedRandom;
  }
  throw Error("unknown split mode '" + text + "'");
}

const char* to_string(SplitName s) {
  switch (s) {
    case SplitName::kTrain:
      return "train";
    case SplitName::kValidation:
      return "validation";
    case SplitName::kTest:
      return "test";
  }
  return "?";
}

void SplitPlan::validate() const {
  if (!(train_fraction > 0 && validation_fraction > 0 && test_fraction > 0)) {
    throw Error("split plan '" + name + "': fractions must be positive");
  }
  if (std::abs(train_fraction + validation_fraction + test_fraction - 1.0) > 1e-9) {
    throw Error("split plan '" + name + "': fractions must sum to 1");
  }
}

std::vector<SplitPlan> standard_configurations() {
  return {
      {"40-10-50", 0.4, 0.1, 0.5, SplitMode::kStratifiedRandom, 0},
      {"60-10-30", 0.6, 0.1, 0.3, SplitMode::kStratifiedRandom, 0},
      {"80-10-10", 0.8, 0.1, 0.1, SplitMode::kStratifiedRandom, 0},
  };
}

SplitPlan parse_plan(const std::string& text, SplitMode mode, std::uint64_t seed) {
  for (auto plan : standard_configurations()) {
    if (plan.name == text) {
      plan.mode = mode;
      plan.seed = seed;
      return plan;
    }
  }
  std::string t = text;
  std::replace_if(t.begin(), t.end(), [](char c) { return c == '-' || c == '/' || c == ','; },
                  ' ');
  std::istringstream in(t);
  double a, b, c;
  if (!(in >> a >> b >> c)) throw Error("cannot parse split configuration '" + text + "'");
  const double sum = a + b + c;
  if (sum > 1.5) a /= 100.0, b /= 100.0, c /= 100.0;
  SplitPlan plan{text, a, b, c, mode, seed};
  plan.validate();
  return plan;
}

namespace {

void split_temporal(const Dataset& d, const SplitPlan& plan, SplitIndices& out) {
  if (!d.timestamps) throw Error("split: temporal mode requires timestamps");
  const auto& ts = *d.timestamps;
  std::vector<std::size_t> order(d.rows());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return ts[a] < ts[b]; });
  const double w[3] = {plan.train_fraction, plan.validation_fraction, plan.test_fraction};
  const auto sizes = apportion(d.rows(), w);
  std::size_t cut1 = sizes[0];
  // Rows sharing a timestamp with the last row of an earlier split stay in
  // that split, so no later split ever precedes it in time.
  while (cut1 > 0 && cut1 < order.size() && ts[order[cut1]] == ts[order[cut1 - 1]]) ++cut1;
  std::size_t cut2 = std::max(cut1, std::min(order.size(), sizes[0] + sizes[1]));
  while (cut2 > 0 && cut2 < order.size() && ts[order[cut2]] == ts[order[cut2 - 1]]) ++cut2;
  out.train.assign(order.begin(), order.begin() + cut1);
  out.validation.assign(order.begin() + cut1, order.begin() + cut2);
  out.test.assign(order.begin() + cut2, order.end());
  if (cut1 != sizes[0] || cut2 != sizes[0] + sizes[1]) {
    out.warnings.push_back("temporal cut moved to keep equal timestamps together");
  }
}

void split_stratified(const Dataset& d, const SplitPlan& plan, SplitIndices& out) {
  std::vector<std::vector<std::size_t>> by_class(d.num_classes());
  for (std::size_t r = 0; r < d.rows(); ++r) by_class[d.labels[r]].push_back(r);
  const double w[3] = {plan.train_fraction, plan.validation_fraction, plan.test_fraction};
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& rows = by_class[c];
    if (rows.empty()) continue;
    if (rows.size() < 3) {
      out.warnings.push_back("class '" + d.class_names[c] + "' has " +
                             std::to_string(rows.size()) +
                             " rows, fewer than the number of splits");
    }
    Rng rng(derive_seed(plan.seed, c));
    rng.shuffle(rows);
    const auto sizes = apportion(rows.size(), w);
    auto it = rows.begin();
    out.train.insert(out.train.end(), it, it + sizes[0]);
    it += sizes[0];
    out.validation.insert(out.validation.end(), it, it + sizes[1]);
    it += sizes[1];
    out.test.insert(out.test.end(), it, rows.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.validation.begin(), out.validation.end());
  std::sort(out.test.begin(), out.test.end());
}

struct RowKey {
  const Matrix* m;
  std::size_t row;
};

struct RowHash {
  std::size_t operator()(const RowKey& k) const {
    std::uint64_t h = 0x84222325CBF29CE4ULL;
    for (double v : k.m->row(k.row)) {
      h = splitmix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return static_cast<std::size_t>(h);
  }
};

struct RowEq {
  bool operator()(const RowKey& a, const RowKey& b) const {
    auto ra = a.m->row(a.row), rb = b.m->row(b.row);
    for (std::size_t j = 0; j < ra.size(); ++j) {
      if (std::bit_cast<std::uint64_t>(ra[j]) != std::bit_cast<std::uint64_t>(rb[j])) {
        return false;
      }
    }
    return true;
  }
};

}  // namespace

SplitIndices split(const Dataset& d, const SplitPlan& plan) {
  plan.validate();
  SplitIndices out;
  if (plan.mode == SplitMode::kTemporal) {
    split_temporal(d, plan, out);
  } else {
    split_stratified(d, plan, out);
  }
  return out;
}

OverlapReport verify_no_overlap(const Dataset& d, const SplitIndices& s) {
  OverlapReport report;
  const std::vector<std::size_t>* parts[3] = {&s.train, &s.validation, &s.test};

  std::map<std::size_t, int> membership;
  for (const auto* p : parts) {
    for (std::size_t r : *p) ++membership[r];
  }
  for (const auto& [row, count] : membership) {
    if (count > 1) report.shared_indices.push_back(row);
  }

  // Per distinct feature row: how many times it occurs in each split.
  std::unordered_map<RowKey, std::array<std::size_t, 3>, RowHash, RowEq> occurrences;
  for (int k = 0; k < 3; ++k) {
    for (std::size_t r : *parts[k]) {
      auto [it, inserted] = occurrences.try_emplace(RowKey{&d.features, r},
                                                    std::array<std::size_t, 3>{0, 0, 0});
      ++it->second[k];
    }
  }
  const std::pair<int, int> pairs[3] = {{0, 1}, {0, 2}, {1, 2}};
  for (auto [a, b] : pairs) {
    DuplicateFinding f{static_cast<SplitName>(a), static_cast<SplitName>(b), 0, 0};
    for (const auto& [key, counts] : occurrences) {
      if (counts[a] > 0 && counts[b] > 0) {
        f.pair_count += counts[a] * counts[b];
        ++f.distinct_rows;
      }
    }
    if (f.pair_count > 0) report.content_duplicates.push_back(f);
  }
  return report;
}

}  // namespace flowgate::splitter
