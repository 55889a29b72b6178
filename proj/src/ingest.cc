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

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <unordered_map>

#include "flowgate/dataset.h"

namespace flowgate {

void Dataset::validate() const {
  if (features.rows() != labels.size()) {
    throw Error("dataset: feature rows != label count");
  }
  if (features.cols() != feature_names.size() && !(features.rows() == 0)) {
    throw Error("dataset: feature name count != matrix columns");
  }
  if (timestamps && timestamps->size() != labels.size()) {
    throw Error("dataset: timestamp count != label count");
  }
  std::set<std::string> seen;
  for (const auto& n : feature_names) {
    if (!seen.insert(n).second) throw Error("dataset: duplicate feature " + n);
  }
  for (ClassId l : labels) {
    if (l >= class_names.size()) throw Error("dataset: label id out of range");
  }
  for (double v : features.data()) {
    if (!std::isfinite(v)) throw Error("dataset: non-finite feature value");
  }
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const {
  Dataset out;
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.features = features.select_rows(rows);
  if (out.features.cols() == 0) out.features = Matrix(rows.size(), num_features());
  out.labels.reserve(rows.size());
  for (std::size_t r : rows) out.labels.push_back(labels[r]);
  if (timestamps) {
    std::vector<std::int64_t> ts;
    ts.reserve(rows.size());
    for (std::size_t r : rows) ts.push_back((*timestamps)[r]);
    out.timestamps = std::move(ts);
  }
  return out;
}

Dataset Dataset::select_features(std::span<const std::size_t> columns) const {
  Dataset out;
  for (std::size_t c : columns) {
    if (c >= num_features()) throw Error("select_features: column out of range");
    out.feature_names.push_back(feature_names[c]);
  }
  out.features = features.select_cols(columns);
  out.labels = labels;
  out.class_names = class_names;
  out.timestamps = timestamps;
  return out;
}

std::optional<std::size_t> Dataset::feature_index(const std::string& name) const {
  auto it = std::find(feature_names.begin(), feature_names.end(), name);
  if (it == feature_names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - feature_names.begin());
}

namespace ingest {
namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

// Parses a numeric cell. Empty cells and the usual spellings of infinity and
// NaN are accepted; anything else is reported as unparseable.
std::optional<double> parse_number(const std::string& raw) {
  const std::string s = trim(raw);
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (*first == '+') ++first;
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec == std::errc() && ptr == last) return value;
  if (ec == std::errc::result_out_of_range && ptr == last) {
    // Overflow saturates to +/-inf, underflow to 0.
    return std::strtod(s.c_str(), nullptr);
  }
  return std::nullopt;
}

bool getline_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  if (!std::getline(in, line)) return false;
  record = line;
  // A record continues while it has an unbalanced quote.
  auto unbalanced = [](const std::string& r) {
    return std::count(r.begin(), r.end(), '"') % 2 == 1;
  };
  while (unbalanced(record) && std::getline(in, line)) {
    record += '\n';
    record += line;
  }
  if (!record.empty() && record.back() == '\r') record.pop_back();
  return true;
}

std::int64_t days_from_civil(std::int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

std::string quote_field(const std::string& s, char delimiter) {
  if (s.find_first_of(std::string("\"\n\r") + delimiter) == std::string::npos) {
    return s;
  }
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string format_double(double v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

}  // namespace

std::string normalize_header(const std::string& raw, bool collapse_whitespace) {
  std::string t = trim(raw);
  // Strip a UTF-8 byte-order mark on the first header.
  if (t.rfind("\xEF\xBB\xBF", 0) == 0) t = trim(t.substr(3));
  if (!collapse_whitespace) return t;
  std::string out;
  bool in_space = false;
  for (char c : t) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = true;
      continue;
    }
    if (in_space) out += '_';
    in_space = false;
    out += c;
  }
  return out;
}

std::vector<std::string> split_csv_record(const std::string& line,
                                          char delimiter) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  fields.push_back(std::move(cur));
  return fields;
}

std::optional<std::int64_t> parse_timestamp(const std::string& text) {
  const std::string s = trim(text);
  if (s.empty()) return std::nullopt;
  {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && ptr == s.data() + s.size()) return v;
  }
  int a = 0, b = 0, c = 0, hh = 0, mm = 0, ss = 0;
  char ampm[3] = {0, 0, 0};
  std::int64_t y = 0;
  unsigned mo = 0, d = 0;
  int n = 0;
  if (std::sscanf(s.c_str(), "%d-%d-%d %d:%d:%d%n", &a, &b, &c, &hh, &mm, &ss, &n) == 6 &&
      static_cast<std::size_t>(n) == s.size()) {
    y = a, mo = b, d = c;
  } else if (std::sscanf(s.c_str(), "%d-%d-%d %d:%d%n", &a, &b, &c, &hh, &mm, &n) == 5 &&
             static_cast<std::size_t>(n) == s.size()) {
    y = a, mo = b, d = c, ss = 0;
  } else {
    // D/M/YYYY H:MM[:SS][ AM|PM]
    int fields = std::sscanf(s.c_str(), "%d/%d/%d %d:%d:%d", &a, &b, &c, &hh, &mm, &ss);
    if (fields == 5) ss = 0;
    if (fields < 5) return std::nullopt;
    y = c, mo = b, d = a;
    const auto pos = s.find_last_of(' ');
    if (pos != std::string::npos && pos + 3 == s.size()) {
      ampm[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[pos + 1])));
      ampm[1] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[pos + 2])));
      if (ampm[1] == 'M') {
        if (ampm[0] == 'P' && hh < 12) hh += 12;
        if (ampm[0] == 'A' && hh == 12) hh = 0;
      }
    }
  }
  if (mo < 1 || mo > 12 || d < 1 || d > 31 || hh < 0 || hh > 23 || mm < 0 ||
      mm > 59 || ss < 0 || ss > 60) {
    return std::nullopt;
  }
  return days_from_civil(y, mo, d) * 86400 + hh * 3600 + mm * 60 + ss;
}

Dataset read_csv(std::istream& in, const std::string& label_column,
                 const std::optional<std::string>& timestamp_column,
                 const IngestOptions& options, IngestStats* stats) {
  std::string record;
  if (!getline_record(in, record) || trim(record).empty()) {
    throw Error("load_csv: empty file");
  }
  std::vector<std::string> header = split_csv_record(record, options.delimiter);
  for (auto& h : header) h = normalize_header(h, options.collapse_whitespace);

  {
    std::unordered_map<std::string, int> seen;
    for (auto& h : header) {
      int& count = seen[h];
      if (count > 0) {
        if (!options.rename_duplicate_headers) {
          throw Error("load_csv: duplicate header name '" + h + "'");
        }
        std::string renamed;
        do {
          renamed = h + "." + std::to_string(count++);
        } while (seen.count(renamed));
        seen[renamed] = 1;
        h = renamed;
      } else {
        count = 1;
      }
    }
  }

  auto find_column = [&](const std::string& name) -> std::optional<std::size_t> {
    const std::string norm = normalize_header(name, options.collapse_whitespace);
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == norm) return i;
    }
    return std::nullopt;
  };

  const auto label_idx = find_column(label_column);
  if (!label_idx) throw Error("load_csv: missing label column '" + label_column + "'");
  std::optional<std::size_t> ts_idx;
  if (timestamp_column) {
    ts_idx = find_column(*timestamp_column);
    if (!ts_idx) {
      throw Error("load_csv: missing timestamp column '" + *timestamp_column + "'");
    }
  }
  std::set<std::size_t> ignored;
  for (const auto& name : options.ignore_columns) {
    if (auto idx = find_column(name)) ignored.insert(*idx);
  }

  Dataset d;
  std::vector<std::size_t> feature_cols;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i == *label_idx || (ts_idx && i == *ts_idx) || ignored.count(i)) continue;
    feature_cols.push_back(i);
    d.feature_names.push_back(header[i]);
  }

  std::vector<double> values;
  std::vector<std::string> raw_labels;
  std::vector<std::int64_t> ts;
  std::size_t line_no = 1;
  std::size_t rows_read = 0;
  while (getline_record(in, record)) {
    ++line_no;
    if (trim(record).empty()) continue;
    auto fields = split_csv_record(record, options.delimiter);
    if (fields.size() != header.size()) {
      throw Error("load_csv: line " + std::to_string(line_no) + " has " +
                  std::to_string(fields.size()) + " fields, expected " +
                  std::to_string(header.size()));
    }
    ++rows_read;
    for (std::size_t c : feature_cols) {
      auto v = parse_number(fields[c]);
      if (!v) {
        if (options.cells == CellPolicy::kStrict) {
          throw Error("load_csv: non-numeric value '" + fields[c] + "' in column '" +
                      header[c] + "' at line " + std::to_string(line_no));
        }
        v = std::numeric_limits<double>::quiet_NaN();
      }
      values.push_back(*v);
    }
    raw_labels.push_back(trim(fields[*label_idx]));
    if (ts_idx) {
      auto t = parse_timestamp(fields[*ts_idx]);
      if (!t) {
        throw Error("load_csv: unparseable timestamp '" + fields[*ts_idx] +
                    "' at line " + std::to_string(line_no));
      }
      ts.push_back(*t);
    }
  }

  const std::size_t ncols = feature_cols.size();
  IngestStats local;
  local.rows_read = rows_read;

  // Non-finite handling.
  std::vector<bool> keep(rows_read, true);
  if (options.non_finite == NonFinitePolicy::kDropRow) {
    for (std::size_t r = 0; r < rows_read; ++r) {
      for (std::size_t c = 0; c < ncols; ++c) {
        if (!std::isfinite(values[r * ncols + c])) {
          keep[r] = false;
          break;
        }
      }
    }
  } else {
    for (std::size_t c = 0; c < ncols; ++c) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t r = 0; r < rows_read; ++r) {
        const double v = values[r * ncols + c];
        if (std::isfinite(v)) {
          lo = std::min(lo, v);
          hi = std::max(hi, v);
        }
      }
      if (!std::isfinite(lo)) lo = hi = 0.0;
      for (std::size_t r = 0; r < rows_read; ++r) {
        double& v = values[r * ncols + c];
        if (std::isfinite(v)) continue;
        v = (v > 0) ? hi : lo;
        ++local.cells_replaced;
      }
    }
  }

  // Class encoding.
  std::vector<std::string> order = options.class_order;
  {
    std::set<std::string> known(order.begin(), order.end());
    std::vector<std::string> extra;
    for (std::size_t r = 0; r < rows_read; ++r) {
      if (keep[r] && known.insert(raw_labels[r]).second) extra.push_back(raw_labels[r]);
    }
    if (options.alphabetical_classes) std::sort(extra.begin(), extra.end());
    order.insert(order.end(), extra.begin(), extra.end());
  }
  std::unordered_map<std::string, ClassId> class_id;
  for (std::size_t i = 0; i < order.size(); ++i) {
    class_id.emplace(order[i], static_cast<ClassId>(i));
  }
  d.class_names = order;

  std::size_t kept = 0;
  for (std::size_t r = 0; r < rows_read; ++r) kept += keep[r];
  d.features = Matrix(kept, ncols);
  d.labels.reserve(kept);
  std::vector<std::int64_t> kept_ts;
  std::size_t out_r = 0;
  for (std::size_t r = 0; r < rows_read; ++r) {
    if (!keep[r]) continue;
    std::copy_n(values.begin() + r * ncols, ncols, d.features.row(out_r).begin());
    d.labels.push_back(class_id.at(raw_labels[r]));
    if (ts_idx) kept_ts.push_back(ts[r]);
    ++out_r;
  }
  if (ts_idx) d.timestamps = std::move(kept_ts);
  local.rows_dropped = rows_read - kept;
  if (stats) *stats = local;
  d.validate();
  return d;
}

namespace {

Dataset load_csv_directory(const std::filesystem::path& dir, const std::string& label_column,
                           const std::optional<std::string>& timestamp_column,
                           const IngestOptions& options, IngestStats* stats) {
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".csv") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("load_csv: no .csv files in '" + dir.string() + "'");

  Dataset out;
  IngestStats total;
  IngestOptions o = options;
  bool first = true;
  for (const auto& f : files) {
    IngestStats part_stats;
    Dataset part = load_csv(f.string(), label_column, timestamp_column, o, &part_stats);
    total.rows_read += part_stats.rows_read;
    total.rows_dropped += part_stats.rows_dropped;
    total.cells_replaced += part_stats.cells_replaced;
    if (first) {
      out = std::move(part);
      first = false;
    } else {
      if (part.feature_names != out.feature_names) {
        throw Error("load_csv: header of '" + f.string() + "' differs from earlier files");
      }
      for (std::size_t r = 0; r < part.rows(); ++r) out.features.append_row(part.features.row(r));
      out.labels.insert(out.labels.end(), part.labels.begin(), part.labels.end());
      if (out.timestamps) {
        out.timestamps->insert(out.timestamps->end(), part.timestamps->begin(),
                               part.timestamps->end());
      }
      // part's classes extend out's as a prefix-preserving superset.
      out.class_names = std::move(part.class_names);
    }
    o.class_order = out.class_names;
  }
  if (stats) *stats = total;
  out.validate();
  return out;
}

}  // namespace

Dataset load_csv(const std::string& path, const std::string& label_column,
                 const std::optional<std::string>& timestamp_column,
                 const IngestOptions& options, IngestStats* stats) {
  if (std::filesystem::is_directory(path)) {
    return load_csv_directory(path, label_column, timestamp_column, options, stats);
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("load_csv: cannot open '" + path + "'");
  return read_csv(in, label_column, timestamp_column, options, stats);
}

void write_csv(std::ostream& out, const Dataset& d, const std::string& label_column,
               const std::string& timestamp_column) {
  const char delim = ',';
  for (const auto& name : d.feature_names) out << quote_field(name, delim) << delim;
  if (d.timestamps) out << quote_field(timestamp_column, delim) << delim;
  out << quote_field(label_column, delim) << '\n';
  for (std::size_t r = 0; r < d.rows(); ++r) {
    for (std::size_t c = 0; c < d.num_features(); ++c) {
      out << format_double(d.features(r, c)) << delim;
    }
    if (d.timestamps) out << (*d.timestamps)[r] << delim;
    out << quote_field(d.class_names[d.labels[r]], delim) << '\n';
  }
}

void save_csv(const std::string& path, const Dataset& d, const std::string& label_column,
              const std::string& timestamp_column) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("save_csv: cannot open '" + path + "' for writing");
  write_csv(out, d, label_column, timestamp_column);
  if (!out) throw Error("save_csv: write failed for '" + path + "'");
}

ClassDistribution class_distribution(const Dataset& d) {
  ClassDistribution out;
  for (ClassId l : d.labels) ++out.counts[l];
  out.total = d.labels.size();
  return out;
}

}  // namespace ingest
}  // namespace flowgate
