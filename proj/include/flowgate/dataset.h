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

#ifndef FLOWGATE_DATASET_H_
#define FLOWGATE_DATASET_H_

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "flowgate/common.h"

namespace flowgate {

using ClassId = std::uint32_t;

// In-memory flow table: numeric features, class labels and optional
// timestamps (seconds, any monotonic origin).
struct Dataset {
  std::vector<std::string> feature_names;
  Matrix features;
  std::vector<ClassId> labels;
  std::vector<std::string> class_names;
  std::optional<std::vector<std::int64_t>> timestamps;

  std::size_t rows() const { return labels.size(); }
  std::size_t num_features() const { return feature_names.size(); }
  std::size_t num_classes() const { return class_names.size(); }

  // Throws Error naming the first broken invariant.
  void validate() const;

  // Same schema, subset of rows in the given order.
  Dataset subset(std::span<const std::size_t> rows) const;
  // Same rows, subset of feature columns in the given order.
  Dataset select_features(std::span<const std::size_t> columns) const;

  std::optional<std::size_t> feature_index(const std::string& name) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

struct ClassDistribution {
  std::map<ClassId, std::uint64_t> counts;
  std::uint64_t total = 0;
};

namespace ingest {

enum class NonFinitePolicy {
  kDropRow,
  // +inf -> column finite max, -inf and NaN -> column finite min.
  kReplaceWithExtremum,
};

enum class CellPolicy {
  kStrict,   // unparseable numeric cell is an error
  kAsNaN,    // unparseable cell becomes NaN and follows NonFinitePolicy
};

struct IngestOptions {
  NonFinitePolicy non_finite = NonFinitePolicy::kDropRow;
  CellPolicy cells = CellPolicy::kStrict;
  // Collapse internal whitespace runs of header names to '_'.
  bool collapse_whitespace = true;
  // Append ".1", ".2", ... to repeated header names instead of failing.
  bool rename_duplicate_headers = false;
  // Columns dropped before type checking (identifiers, addresses, ...).
  std::vector<std::string> ignore_columns;
  // Classes listed here come first, in this order; unlisted classes follow in
  // order of first appearance.
  std::vector<std::string> class_order;
  bool alphabetical_classes = false;
  char delimiter = ',';
};

// Statistics about what ingestion did to the raw rows.
struct IngestStats {
  std::size_t rows_read = 0;
  std::size_t rows_dropped = 0;
  std::size_t cells_replaced = 0;
};

std::string normalize_header(const std::string& raw, bool collapse_whitespace);

// A directory path loads every *.csv inside it in file-name order and
// concatenates them; all files must share one header. Classes keep the ids
// they received in earlier files.
Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& timestamp_column,
                 const IngestOptions& options, IngestStats* stats = nullptr);

Dataset read_csv(std::istream& in, const std::string& label_column,
                 const std::optional<std::string>& timestamp_column,
                 const IngestOptions& options, IngestStats* stats = nullptr);

// Writes feature columns, then the timestamp column (if any), then the label
// column. Numbers use round-trip precision.
void write_csv(std::ostream& out, const Dataset& d,
               const std::string& label_column = "Label",
               const std::string& timestamp_column = "Timestamp");
void save_csv(const std::string& path, const Dataset& d,
              const std::string& label_column = "Label",
              const std::string& timestamp_column = "Timestamp");

// Accepts integers (seconds), "YYYY-MM-DD HH:MM[:SS]" and the CIC-IDS2017
// "D/M/YYYY H:MM[:SS][ AM|PM]" form. Returns seconds since 1970-01-01.
std::optional<std::int64_t> parse_timestamp(const std::string& text);

// Splits one CSV record per RFC 4180 (quoted fields, doubled quotes).
std::vector<std::string> split_csv_record(const std::string& line, char delimiter);

ClassDistribution class_distribution(const Dataset& d);

}  // namespace ingest
}  // namespace flowgate

#endif  // FLOWGATE_DATASET_H_
