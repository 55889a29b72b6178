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

#ifndef FLOWGATE_SPLITTER_H_
#define FLOWGATE_SPLITTER_H_

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "flowgate/dataset.h"

namespace flowgate::splitter {

enum class SplitMode { kStratifiedRandom, kTemporal };

std::string to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& text);

struct SplitPlan {
  std::string name;
  double train_fraction = 0.6;
  double validation_fraction = 0.1;
  double test_fraction = 0.3;
  SplitMode mode = SplitMode::kStratifiedRandom;
  std::uint64_t seed = 0;

  // Fractions positive and summing to 1 within 1e-9.
  void validate() const;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> validation;
  std::vector<std::size_t> test;
  // Non-fatal findings, e.g. classes too small to reach every split.
  std::vector<std::string> warnings;
};

// The three named partitions 40-10-50, 60-10-30, 80-10-10.
std::vector<SplitPlan> standard_configurations();

// Accepts a standard name ("60-10-30") or three percentages/fractions
// separated by '-', '/' or ',' ("70-10-20", "0.7,0.1,0.2").
SplitPlan parse_plan(const std::string& text, SplitMode mode, std::uint64_t seed);

SplitIndices split(const Dataset& d, const SplitPlan& plan);

enum class SplitName { kTrain = 0, kValidation = 1, kTest = 2 };
const char* to_string(SplitName s);

struct DuplicateFinding {
  SplitName first;
  SplitName second;
  // Number of (row in first, row in second) pairs with identical features.
  std::size_t pair_count = 0;
  // Number of distinct feature rows involved.
  std::size_t distinct_rows = 0;
};

struct OverlapReport {
  // Row indices assigned to more than one split.
  std::vector<std::size_t> shared_indices;
  std::vector<DuplicateFinding> content_duplicates;

  bool empty() const { return shared_indices.empty() && content_duplicates.empty(); }
};

OverlapReport verify_no_overlap(const Dataset& d, const SplitIndices& s);

}  // namespace flowgate::splitter

#endif  // FLOWGATE_SPLITTER_H_
