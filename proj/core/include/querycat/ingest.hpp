// Copyright 2026 The QueryCat Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Click-log ingestion: parsing, noise filtering, collaborative-click
// aggregation and dominant-category labeling.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace querycat {

using CategoryId = std::int64_t;

struct ClickEvent {
  std::string session_id;
  std::int64_t timestamp = 0;  // unix seconds
  std::string query_raw;
  std::string ad_id;
  CategoryId category_id = 0;
  bool is_bot = false;

  bool operator==(const ClickEvent&) const = default;
};

struct NoisePolicy {
  bool drop_bots = true;
  std::int64_t dedupe_window_seconds = 60;
  // Unset means every category is considered live.
  std::optional<std::set<CategoryId>> live_categories;
  std::int64_t min_clicks_per_query = 3;

  // Throws InvalidArgument.
  void validate() const;
};

struct CategoryCounts {
  std::string query_norm;
  std::map<CategoryId, std::int64_t> counts;

  std::int64_t total() const;
  bool operator==(const CategoryCounts&) const = default;
};

struct QueryRecord {
  std::string query_norm;
  CategoryId dominant_category = 0;
  // Up to three (category, conversion rate) pairs; rate descending, ties by
  // ascending category id.
  std::vector<std::pair<CategoryId, double>> top3;
  std::map<CategoryId, double> rates;
  std::int64_t total_clicks = 0;
};

struct ParseResult {
  std::vector<ClickEvent> events;
  std::size_t skipped = 0;  // malformed lines dropped in lenient mode
};

// JSON-lines click log: {"session","ts","query","ad","cat","bot"?}. Blank
// lines are ignored. Strict mode throws MalformedRecord on the first bad
// line; lenient mode counts and skips it. Throws IoFailure if the stream
// goes bad mid-read.
ParseResult parse_click_log(std::istream& in, bool strict);

void write_click_log(std::ostream& out, std::span<const ClickEvent> events);

// Keeps events with start <= timestamp <= end.
std::vector<ClickEvent> filter_time_range(std::span<const ClickEvent> events,
                                          std::int64_t start, std::int64_t end);

// Pipeline: bots -> redundant clicks -> dead categories -> thin queries.
// Survivors keep their input order.
std::vector<ClickEvent> filter_noise(std::span<const ClickEvent> events,
                                     const NoisePolicy& policy);

// Per (normalized query, category) click counts, ascending by query. Events
// whose query normalizes to the empty string are dropped.
std::vector<CategoryCounts> aggregate(std::span<const ClickEvent> events);

// Same result as aggregate(), computed over `shards` hash partitions of the
// query space and merged.
std::vector<CategoryCounts> aggregate_sharded(std::span<const ClickEvent> events,
                                              std::size_t shards);

// Sums counts per query. Inputs need not be sorted; output is.
std::vector<CategoryCounts> merge_counts(std::span<const CategoryCounts> a,
                                         std::span<const CategoryCounts> b);

// Requires non-empty counts (InvalidArgument otherwise).
QueryRecord label(const CategoryCounts& counts);
std::vector<QueryRecord> label_all(std::span<const CategoryCounts> counts);

// TSV with header `query, dominant, total_clicks, top3`; top3 is
// semicolon-joined "id:rate" with six decimals.
void write_labeled_tsv(std::ostream& out, std::span<const QueryRecord> records);

// Reads the TSV back. Only the top3 entries are known, so `rates` holds
// just those. Throws MalformedRecord.
std::vector<QueryRecord> read_labeled_tsv(std::istream& in);

}  // namespace querycat
