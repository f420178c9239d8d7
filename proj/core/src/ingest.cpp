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

#include "querycat/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <tuple>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "querycat/error.hpp"
#include "querycat/io.hpp"
#include "querycat/textprep.hpp"

namespace querycat {
namespace {

using nlohmann::json;

// Returns an explanation when the object is not a valid click record.
std::string decode_event(const json& obj, ClickEvent& event) {
  if (!obj.is_object()) return "not a JSON object";
  const auto field = [&](const char* key) -> const json* {
    const auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
  };
  const json* session = field("session");
  const json* ts = field("ts");
  const json* query = field("query");
  const json* ad = field("ad");
  const json* cat = field("cat");
  const json* bot = field("bot");
  if (!session || !session->is_string()) return "missing string 'session'";
  if (!ts || !ts->is_number_integer()) return "missing integer 'ts'";
  if (!query || !query->is_string()) return "missing string 'query'";
  if (!ad || !ad->is_string()) return "missing string 'ad'";
  if (!cat || !cat->is_number_integer()) return "missing integer 'cat'";
  if (bot && !bot->is_null() && !bot->is_boolean()) return "'bot' must be boolean";

  event.session_id = session->get<std::string>();
  event.timestamp = ts->get<std::int64_t>();
  event.query_raw = query->get<std::string>();
  event.ad_id = ad->get<std::string>();
  event.category_id = cat->get<std::int64_t>();
  event.is_bot = bot && bot->is_boolean() && bot->get<bool>();

  if (event.timestamp < 0) return "negative 'ts'";
  if (event.category_id < 0) return "negative 'cat'";
  if (event.query_raw.empty()) return "empty 'query'";
  return {};
}

std::string format_rate(double rate) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", rate);
  return buf;
}

std::vector<std::string> split_on(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t end = s.find(sep, begin);
    parts.push_back(s.substr(begin, end - begin));
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return parts;
}

template <typename T>
bool parse_number(const std::string& s, T& out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace

void NoisePolicy::validate() const {
  if (dedupe_window_seconds < 0) {
    throw Error(ErrorCode::kInvalidArgument, "dedupe_window_seconds must be >= 0");
  }
  if (min_clicks_per_query < 1) {
    throw Error(ErrorCode::kInvalidArgument, "min_clicks_per_query must be >= 1");
  }
}

std::int64_t CategoryCounts::total() const {
  std::int64_t sum = 0;
  for (const auto& [cat, n] : counts) sum += n;
  return sum;
}

ParseResult parse_click_log(std::istream& in, bool strict) {
  ParseResult result;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;

    ClickEvent event;
    std::string problem;
    json obj = json::parse(line, nullptr, /*allow_exceptions=*/false);
    if (obj.is_discarded()) {
      problem = "invalid JSON";
    } else {
      problem = decode_event(obj, event);
    }
    if (!problem.empty()) {
      if (strict) throw MalformedRecord(line_no, problem);
      ++result.skipped;
      continue;
    }
    result.events.push_back(std::move(event));
  }
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "click log stream failed");
  return result;
}

void write_click_log(std::ostream& out, std::span<const ClickEvent> events) {
  for (const ClickEvent& e : events) {
    json obj = {{"session", e.session_id}, {"ts", e.timestamp}, {"query", e.query_raw},
                {"ad", e.ad_id},           {"cat", e.category_id}};
    if (e.is_bot) obj["bot"] = true;
    out << obj.dump() << '\n';
  }
}

std::vector<ClickEvent> filter_time_range(std::span<const ClickEvent> events,
                                          std::int64_t start, std::int64_t end) {
  std::vector<ClickEvent> kept;
  for (const ClickEvent& e : events) {
    if (e.timestamp >= start && e.timestamp <= end) kept.push_back(e);
  }
  return kept;
}

std::vector<ClickEvent> filter_noise(std::span<const ClickEvent> events,
                                     const NoisePolicy& policy) {
  policy.validate();
  const std::size_t n = events.size();
  std::vector<std::string> norm(n);
  for (std::size_t i = 0; i < n; ++i) norm[i] = normalize(events[i].query_raw);

  std::vector<bool> keep(n, true);
  if (policy.drop_bots) {
    for (std::size_t i = 0; i < n; ++i) {
      if (events[i].is_bot) keep[i] = false;
    }
  }

  // Redundant clicks: within a (session, query, ad) key, a click collapses
  // into the last kept click when no more than the window apart.
  {
    std::vector<std::size_t> order;
    order.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i]) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return events[a].timestamp < events[b].timestamp;
    });
    std::map<std::tuple<std::string_view, std::string_view, std::string_view>, std::int64_t>
        last_kept;
    for (const std::size_t i : order) {
      const auto key = std::make_tuple(std::string_view(events[i].session_id),
                                       std::string_view(norm[i]),
                                       std::string_view(events[i].ad_id));
      const auto it = last_kept.find(key);
      if (it != last_kept.end() &&
          events[i].timestamp - it->second <= policy.dedupe_window_seconds) {
        keep[i] = false;
        continue;
      }
      last_kept[key] = events[i].timestamp;
    }
  }

  if (policy.live_categories) {
    for (std::size_t i = 0; i < n; ++i) {
      if (keep[i] && !policy.live_categories->contains(events[i].category_id)) keep[i] = false;
    }
  }

  std::unordered_map<std::string_view, std::int64_t> clicks;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i]) ++clicks[norm[i]];
  }
  std::vector<ClickEvent> kept;
  for (std::size_t i = 0; i < n; ++i) {
    if (keep[i] && clicks[norm[i]] >= policy.min_clicks_per_query) kept.push_back(events[i]);
  }
  return kept;
}

std::vector<CategoryCounts> aggregate(std::span<const ClickEvent> events) {
  std::map<std::string, std::map<CategoryId, std::int64_t>> table;
  for (const ClickEvent& e : events) {
    std::string q = normalize(e.query_raw);
    if (q.empty()) continue;
    ++table[std::move(q)][e.category_id];
  }
  std::vector<CategoryCounts> out;
  out.reserve(table.size());
  for (auto& [query, counts] : table) out.push_back({query, std::move(counts)});
  return out;
}

std::vector<CategoryCounts> aggregate_sharded(std::span<const ClickEvent> events,
                                              std::size_t shards) {
  if (shards == 0) throw Error(ErrorCode::kInvalidArgument, "shard count must be >= 1");
  std::vector<std::vector<ClickEvent>> parts(shards);
  for (const ClickEvent& e : events) {
    parts[fnv1a64(normalize(e.query_raw)) % shards].push_back(e);
  }
  std::vector<CategoryCounts> merged;
  for (const auto& part : parts) merged = merge_counts(merged, aggregate(part));
  return merged;
}

std::vector<CategoryCounts> merge_counts(std::span<const CategoryCounts> a,
                                         std::span<const CategoryCounts> b) {
  std::map<std::string, std::map<CategoryId, std::int64_t>> table;
  for (const auto* side : {&a, &b}) {
    for (const CategoryCounts& c : *side) {
      auto& row = table[c.query_norm];
      for (const auto& [cat, n] : c.counts) row[cat] += n;
    }
  }
  std::vector<CategoryCounts> out;
  out.reserve(table.size());
  for (auto& [query, counts] : table) out.push_back({query, std::move(counts)});
  return out;
}

QueryRecord label(const CategoryCounts& counts) {
  if (counts.counts.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no clicks for query '" + counts.query_norm + "'");
  }
  QueryRecord record;
  record.query_norm = counts.query_norm;
  record.total_clicks = counts.total();

  std::int64_t best = -1;
  for (const auto& [cat, n] : counts.counts) {
    if (n > best) {  // ascending ids, so the first maximum is the lowest id
      best = n;
      record.dominant_category = cat;
    }
    record.rates[cat] = static_cast<double>(n) / static_cast<double>(record.total_clicks);
  }

  std::vector<std::pair<CategoryId, std::int64_t>> ranked(counts.counts.begin(),
                                                          counts.counts.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& x, const auto& y) { return x.second > y.second; });
  for (std::size_t i = 0; i < ranked.size() && i < 3; ++i) {
    record.top3.emplace_back(ranked[i].first, record.rates[ranked[i].first]);
  }
  return record;
}

std::vector<QueryRecord> label_all(std::span<const CategoryCounts> counts) {
  std::vector<QueryRecord> records;
  records.reserve(counts.size());
  for (const CategoryCounts& c : counts) records.push_back(label(c));
  return records;
}

void write_labeled_tsv(std::ostream& out, std::span<const QueryRecord> records) {
  out << "query\tdominant\ttotal_clicks\ttop3\n";
  for (const QueryRecord& r : records) {
    out << r.query_norm << '\t' << r.dominant_category << '\t' << r.total_clicks << '\t';
    for (std::size_t i = 0; i < r.top3.size(); ++i) {
      if (i) out << ';';
      out << r.top3[i].first << ':' << format_rate(r.top3[i].second);
    }
    out << '\n';
  }
}

std::vector<QueryRecord> read_labeled_tsv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "query\tdominant\ttotal_clicks\ttop3") {
    throw MalformedRecord(1, "expected header 'query<TAB>dominant<TAB>total_clicks<TAB>top3'");
  }
  std::vector<QueryRecord> records;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cols = split_on(line, '\t');
    if (cols.size() != 4) throw MalformedRecord(line_no, "expected 4 columns");
    QueryRecord r;
    r.query_norm = cols[0];
    if (r.query_norm.empty() || !parse_number(cols[1], r.dominant_category) ||
        !parse_number(cols[2], r.total_clicks)) {
      throw MalformedRecord(line_no, "bad query, dominant or total_clicks");
    }
    if (!cols[3].empty()) {
      for (const std::string& item : split_on(cols[3], ';')) {
        const auto colon = item.find(':');
        CategoryId cat = 0;
        double rate = 0.0;
        if (colon == std::string::npos || !parse_number(item.substr(0, colon), cat) ||
            !parse_number(item.substr(colon + 1), rate)) {
          throw MalformedRecord(line_no, "bad top3 entry '" + item + "'");
        }
        r.top3.emplace_back(cat, rate);
        r.rates[cat] = rate;
      }
    }
    records.push_back(std::move(r));
  }
  if (in.bad()) throw Error(ErrorCode::kIoFailure, "labeled TSV stream failed");
  return records;
}

}  // namespace querycat
