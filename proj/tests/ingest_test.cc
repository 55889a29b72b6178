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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "flowgate/dataset.h"
#include "gtest/gtest.h"
#include "test_util.h"

namespace flowgate::ingest {
namespace {

Dataset read(const std::string& text, const IngestOptions& o = {},
             const std::optional<std::string>& ts = std::nullopt,
             IngestStats* stats = nullptr) {
  std::istringstream in(text);
  return read_csv(in, "Label", ts, o, stats);
}

TEST(IngestTest, TrimsHeadersAndOrdersClassesByFirstAppearance) {
  IngestOptions o;
  o.collapse_whitespace = false;
  const Dataset d = read(" Flow Duration ,Label\n1,BENIGN\n2,DoS\n3,BENIGN\n", o);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"Flow Duration"}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"BENIGN", "DoS"}));
  EXPECT_EQ(d.labels, (std::vector<ClassId>{0, 1, 0}));
}

TEST(IngestTest, DefaultCollapsesInternalWhitespace) {
  const Dataset d = read(" Flow  Duration , Label\n1,BENIGN\n");
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"Flow_Duration"}));
}

TEST(IngestTest, InfinityRowDroppedUnderDropPolicy) {
  IngestStats stats;
  const Dataset d = read("a,b,Label\n1,2,X\nInfinity,3,Y\n4,NaN,X\n5,6,X\n", {}, std::nullopt,
                         &stats);
  EXPECT_EQ(d.rows(), 2u);
  EXPECT_EQ(stats.rows_read, 4u);
  EXPECT_EQ(stats.rows_dropped, 2u);
  // Y only appeared on a dropped row.
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"X"}));
}

TEST(IngestTest, ReplacePolicyUsesColumnExtremes) {
  IngestOptions o;
  o.non_finite = NonFinitePolicy::kReplaceWithExtremum;
  const Dataset d = read("a,Label\n1,X\nInfinity,X\n-inf,X\n7,X\nNaN,X\n", o);
  ASSERT_EQ(d.rows(), 5u);
  EXPECT_EQ(d.features(1, 0), 7.0);
  EXPECT_EQ(d.features(2, 0), 1.0);
  EXPECT_EQ(d.features(4, 0), 1.0);
}

TEST(IngestTest, Errors) {
  EXPECT_THROW(read(""), Error);
  EXPECT_THROW(read("a,b\n1,2\n"), Error);              // no label column
  EXPECT_THROW(read("a,a,Label\n1,2,X\n"), Error);      // duplicate header
  EXPECT_THROW(read("a,Label\nabc,X\n"), Error);        // strict numeric
  EXPECT_THROW(read("a,Label\n1,2,X\n"), Error);        // ragged row
}

TEST(IngestTest, DuplicateHeadersCanBeRenamed) {
  IngestOptions o;
  o.rename_duplicate_headers = true;
  const Dataset d = read("a,a,Label\n1,2,X\n", o);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a", "a.1"}));
}

TEST(IngestTest, LenientCellsBecomeNonFinite) {
  IngestOptions o;
  o.cells = CellPolicy::kAsNaN;
  const Dataset d = read("a,Label\nabc,X\n2,X\n", o);
  EXPECT_EQ(d.rows(), 1u);
}

TEST(IngestTest, IgnoredColumnsAreSkippedBeforeTypeChecks) {
  IngestOptions o;
  o.ignore_columns = {"Src IP"};
  const Dataset d = read("Src IP,a,Label\n10.0.0.1,1,X\n", o);
  EXPECT_EQ(d.feature_names, (std::vector<std::string>{"a"}));
}

TEST(IngestTest, QuotedFields) {
  EXPECT_EQ(split_csv_record("1,\"a,b\",\"he said \"\"hi\"\"\"", ','),
            (std::vector<std::string>{"1", "a,b", "he said \"hi\""}));
}

TEST(IngestTest, Timestamps) {
  EXPECT_EQ(parse_timestamp("0"), 0);
  EXPECT_EQ(parse_timestamp("1970-01-02 00:00:00"), 86400);
  EXPECT_EQ(parse_timestamp("3/7/2017 8:55"), parse_timestamp("2017-07-03 08:55:00"));
  EXPECT_EQ(*parse_timestamp("3/7/2017 1:05:00 PM"), *parse_timestamp("2017-07-03 13:05:00"));
  EXPECT_FALSE(parse_timestamp("yesterday").has_value());
  const Dataset d = read("a,Timestamp,Label\n1,5,X\n2,3,Y\n", {}, std::string("Timestamp"));
  ASSERT_TRUE(d.timestamps.has_value());
  EXPECT_EQ(*d.timestamps, (std::vector<std::int64_t>{5, 3}));
}

TEST(IngestTest, ClassDistribution) {
  const Dataset d = testing::make_dataset({{1}, {2}, {3}}, {0, 1, 0}, 2);
  const auto cd = class_distribution(d);
  EXPECT_EQ(cd.total, 3u);
  EXPECT_EQ(cd.counts.at(0), 2u);
  EXPECT_EQ(cd.counts.at(1), 1u);
  const auto empty = class_distribution(Dataset{});
  EXPECT_EQ(empty.total, 0u);
  EXPECT_TRUE(empty.counts.empty());
}

TEST(IngestTest, DeterministicParse) {
  const std::string text = "a,b,Label\n1.5,2,X\n3,4e-3,Y\n";
  EXPECT_EQ(read(text), read(text));
}

// Property: write then reload gives back the same dataset, including values
// that need all 17 significant digits.
TEST(IngestTest, RoundTripThroughCsv) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Dataset d = testing::random_dataset(50, 4, 3, seed);
    d.features(0, 0) = 0.1 + 0.2;
    d.features(1, 1) = 1e-300;
    d.features(2, 2) = -123456789.123456789;
    d.timestamps = std::vector<std::int64_t>(50);
    for (std::size_t i = 0; i < 50; ++i) (*d.timestamps)[i] = 1'500'000'000 + 7 * i;
    std::ostringstream out;
    write_csv(out, d);
    std::istringstream in(out.str());
    IngestOptions o;
    o.class_order = d.class_names;
    const Dataset back = read_csv(in, "Label", std::string("Timestamp"), o);
    EXPECT_EQ(back, d);
  }
}

TEST(IngestTest, LoadCsvFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "flowgate_ingest_test.csv";
  {
    std::ofstream f(path);
    f << "x,Label\n1,A\n2,B\n";
  }
  const Dataset d = load_csv(path.string(), "Label", std::nullopt, {});
  EXPECT_EQ(d.rows(), 2u);
  std::filesystem::remove(path);
  EXPECT_THROW(load_csv(path.string(), "Label", std::nullopt, {}), Error);
}

TEST(IngestTest, DirectoryConcatenatesFilesInNameOrder) {
  const auto dir = std::filesystem::temp_directory_path() / "flowgate_ingest_dir_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  {
    std::ofstream(dir / "b.csv") << "x,Label\n3,DoS\n4,BENIGN\n";
    std::ofstream(dir / "a.csv") << "x,Label\n1,BENIGN\n2,BENIGN\n";
    std::ofstream(dir / "notes.txt") << "ignored";
  }
  IngestStats stats;
  const Dataset d = load_csv(dir.string(), "Label", std::nullopt, {}, &stats);
  EXPECT_EQ(d.rows(), 4u);
  EXPECT_EQ(stats.rows_read, 4u);
  EXPECT_EQ(d.features.column(0), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(d.class_names, (std::vector<std::string>{"BENIGN", "DoS"}));
  EXPECT_EQ(d.labels, (std::vector<ClassId>{0, 0, 1, 0}));
  std::ofstream(dir / "c.csv") << "y,Label\n1,BENIGN\n";
  EXPECT_THROW(load_csv(dir.string(), "Label", std::nullopt, {}), Error);
  std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace flowgate::ingest
