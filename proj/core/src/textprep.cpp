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

#include "querycat/textprep.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <unicode/uchar.h>
#include <unicode/utf8.h>

#include "querycat/error.hpp"
#include "querycat/io.hpp"
#include "querycat/random.hpp"

namespace querycat {
namespace {

bool is_separator(UChar32 c) {
  if (c < 0x80 && std::ispunct(static_cast<int>(c))) return true;
  return u_ispunct(c) || u_isUWhiteSpace(c) || u_iscntrl(c);
}

template <typename T>
bool parse_int(std::string_view s, T& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split_view(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  std::size_t begin = 0;
  for (;;) {
    const std::size_t end = s.find(sep, begin);
    parts.push_back(s.substr(begin, end == std::string_view::npos ? end : end - begin));
    if (end == std::string_view::npos) break;
    begin = end + 1;
  }
  return parts;
}

[[noreturn]] void bad_format(const std::string& what) {
  throw Error(ErrorCode::kFormatVersionMismatch, what);
}

[[noreturn]] void truncated(const std::string& what) {
  throw Error(ErrorCode::kIoFailure, what);
}

}  // namespace

std::string normalize(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_space = false;
  const auto* bytes = reinterpret_cast<const uint8_t*>(raw.data());
  const auto length = static_cast<int32_t>(raw.size());
  int32_t i = 0;
  while (i < length) {
    UChar32 c;
    U8_NEXT(bytes, i, length, c);
    if (c < 0) continue;  // ill-formed sequence
    if (is_separator(c)) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) {
      out.push_back(' ');
      pending_space = false;
    }
    const UChar32 lower = u_tolower(c);
    char buf[U8_MAX_LENGTH];
    int32_t n = 0;
    U8_APPEND_UNSAFE(buf, n, lower);
    out.append(buf, static_cast<std::size_t>(n));
  }
  return out;
}

std::vector<std::string_view> tokenize(std::string_view normalized) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < normalized.size()) {
    while (i < normalized.size() && normalized[i] == ' ') ++i;
    const std::size_t start = i;
    while (i < normalized.size() && normalized[i] != ' ') ++i;
    if (i > start) tokens.push_back(normalized.substr(start, i - start));
  }
  return tokens;
}

Vocabulary::Vocabulary() : Vocabulary({}, 2) {}

Vocabulary::Vocabulary(std::vector<std::string> words, std::size_t max_size)
    : max_size_(max_size) {
  if (words.size() + 2 > max_size) {
    throw Error(ErrorCode::kInvalidArgument, "vocabulary exceeds its max_size");
  }
  id_to_word_.reserve(words.size() + 2);
  id_to_word_.emplace_back(kPadToken);
  id_to_word_.emplace_back(kUnkToken);
  for (auto& w : words) id_to_word_.push_back(std::move(w));
  word_to_id_.reserve(id_to_word_.size());
  for (std::size_t id = 0; id < id_to_word_.size(); ++id) {
    const auto [it, inserted] =
        word_to_id_.emplace(id_to_word_[id], static_cast<std::int32_t>(id));
    if (!inserted || id_to_word_[id].empty()) {
      throw Error(ErrorCode::kInvalidArgument, "duplicate or empty vocabulary word '" +
                                                   id_to_word_[id] + "'");
    }
  }
}

std::int32_t Vocabulary::id_of(std::string_view word) const {
  const auto it = word_to_id_.find(std::string(word));
  return it == word_to_id_.end() ? kUnkId : it->second;
}

const std::string& Vocabulary::word(std::int32_t id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= id_to_word_.size()) {
    throw Error(ErrorCode::kIndexOutOfRange, "vocabulary id " + std::to_string(id));
  }
  return id_to_word_[static_cast<std::size_t>(id)];
}

bool Vocabulary::contains(std::string_view word) const {
  return word_to_id_.contains(std::string(word));
}

std::string Vocabulary::content_hash() const {
  std::ostringstream serialized;
  write_vocabulary(serialized, *this);
  return hex64(fnv1a64(serialized.str()));
}

Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t max_size) {
  if (max_size < 3) throw Error(ErrorCode::kInvalidArgument, "max_size must be >= 3");
  std::map<std::string, std::size_t, std::less<>> freq;
  for (const std::string& query : corpus) {
    for (const std::string_view token : tokenize(query)) {
      if (token == Vocabulary::kPadToken || token == Vocabulary::kUnkToken) continue;
      auto it = freq.find(token);
      if (it == freq.end()) it = freq.emplace(std::string(token), 0).first;
      ++it->second;
    }
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  // freq is already lexicographic, so a stable sort on count keeps that order
  // among equal counts.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  const std::size_t keep = std::min(ranked.size(), max_size - 2);
  std::vector<std::string> words;
  words.reserve(keep);
  for (std::size_t i = 0; i < keep; ++i) words.push_back(std::move(ranked[i].first));
  return Vocabulary(std::move(words), max_size);
}

std::vector<std::int32_t> encode(std::string_view normalized, const Vocabulary& vocab,
                                 std::size_t seq_len) {
  if (seq_len < 1) throw Error(ErrorCode::kInvalidArgument, "seq_len must be >= 1");
  std::vector<std::int32_t> ids(seq_len, Vocabulary::kPadId);
  std::size_t pos = 0;
  for (const std::string_view token : tokenize(normalized)) {
    if (pos == seq_len) break;
    ids[pos++] = vocab.id_of(token);
  }
  return ids;
}

std::int32_t Dataset::class_index(CategoryId category) const {
  const auto it = std::find(class_ids.begin(), class_ids.end(), category);
  return it == class_ids.end() ? -1 : static_cast<std::int32_t>(it - class_ids.begin());
}

void Dataset::validate(std::size_t vocab_rows) const {
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const EncodedQuery& ex = examples[i];
    if (ex.ids.size() != seq_len) {
      throw Error(ErrorCode::kShapeMismatch, "example " + std::to_string(i) + " has length " +
                                                 std::to_string(ex.ids.size()));
    }
    if (ex.label < 0 || static_cast<std::size_t>(ex.label) >= class_ids.size()) {
      throw Error(ErrorCode::kInvalidArgument, "example " + std::to_string(i) + " label out of range");
    }
    for (const std::int32_t id : ex.ids) {
      if (id < 0 || (vocab_rows && static_cast<std::size_t>(id) >= vocab_rows)) {
        throw Error(ErrorCode::kIndexOutOfRange, "example " + std::to_string(i) + " id " +
                                                     std::to_string(id));
      }
    }
  }
}

SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "split ratio must be in (0, 1)");
  }
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  const auto n_train = std::min(
      n, static_cast<std::size_t>(std::ceil(static_cast<double>(n) * ratio - 1e-9)));
  SplitIndices out;
  out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  out.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train), order.end());
  return out;
}

DatasetSplit split(const Dataset& dataset, double ratio, std::uint64_t seed) {
  const SplitIndices idx = split_indices(dataset.size(), ratio, seed);
  DatasetSplit out;
  for (Dataset* side : {&out.train, &out.test}) {
    side->class_ids = dataset.class_ids;
    side->seq_len = dataset.seq_len;
  }
  for (const std::size_t i : idx.train) out.train.examples.push_back(dataset.examples[i]);
  for (const std::size_t i : idx.test) out.test.examples.push_back(dataset.examples[i]);
  return out;
}

PreparedData prepare_datasets(std::span<const QueryRecord> records,
                              const PrepareOptions& options) {
  std::set<CategoryId> classes;
  for (const QueryRecord& r : records) classes.insert(r.dominant_category);
  const std::vector<CategoryId> class_ids(classes.begin(), classes.end());

  const SplitIndices idx = split_indices(records.size(), options.train_ratio, options.seed);
  std::vector<std::string> train_queries;
  train_queries.reserve(idx.train.size());
  for (const std::size_t i : idx.train) train_queries.push_back(normalize(records[i].query_norm));

  PreparedData out;
  out.vocab = build_vocab(train_queries, options.max_vocab);
  const auto fill = [&](Dataset& ds, const std::vector<std::size_t>& rows) {
    ds.class_ids = class_ids;
    ds.seq_len = options.seq_len;
    ds.examples.reserve(rows.size());
    for (const std::size_t i : rows) {
      const auto cls = std::lower_bound(class_ids.begin(), class_ids.end(),
                                        records[i].dominant_category) -
                       class_ids.begin();
      ds.examples.push_back({encode(normalize(records[i].query_norm), out.vocab, options.seq_len),
                             static_cast<std::int32_t>(cls)});
    }
  };
  fill(out.train, idx.train);
  fill(out.test, idx.test);
  return out;
}

void write_vocabulary(std::ostream& out, const Vocabulary& vocab) {
  const auto& words = vocab.words();
  for (std::size_t id = 0; id < words.size(); ++id) out << words[id] << '\t' << id << '\n';
}

Vocabulary read_vocabulary(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    std::size_t id = 0;
    if (tab == std::string::npos || !parse_int(std::string_view(line).substr(tab + 1), id)) {
      bad_format("vocabulary line " + std::to_string(expected + 1) + " is not 'word<TAB>id'");
    }
    if (id != expected) bad_format("vocabulary ids must ascend from 0");
    std::string word = line.substr(0, tab);
    if ((id == 0 && word != Vocabulary::kPadToken) || (id == 1 && word != Vocabulary::kUnkToken)) {
      bad_format("vocabulary must start with <pad> and <unk>");
    }
    if (id >= 2) words.push_back(std::move(word));
    ++expected;
  }
  if (in.bad()) truncated("vocabulary stream failed");
  if (expected < 2) bad_format("vocabulary is missing the reserved entries");
  const std::size_t size = words.size() + 2;
  return Vocabulary(std::move(words), size);
}

void save_vocabulary(const Vocabulary& vocab, const std::string& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_vocabulary(out, vocab); });
}

Vocabulary load_vocabulary(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_vocabulary(in);
}

void write_dataset(std::ostream& out, const Dataset& dataset) {
  out << "seq_len=" << dataset.seq_len << " classes=";
  for (std::size_t i = 0; i < dataset.class_ids.size(); ++i) {
    if (i) out << ',';
    out << dataset.class_ids[i];
  }
  out << " count=" << dataset.examples.size() << '\n';
  for (const EncodedQuery& ex : dataset.examples) {
    out << ex.label << '\t';
    for (std::size_t i = 0; i < ex.ids.size(); ++i) {
      if (i) out << ' ';
      out << ex.ids[i];
    }
    out << '\n';
  }
}

Dataset read_dataset(std::istream& in) {
  std::string header;
  if (!std::getline(in, header)) bad_format("empty dataset file");
  Dataset ds;
  std::size_t count = 0;
  bool has_seq = false, has_classes = false, has_count = false;
  for (const std::string_view field : split_view(header, ' ')) {
    const auto eq = field.find('=');
    if (eq == std::string_view::npos) bad_format("dataset header field '" + std::string(field) + "'");
    const std::string_view key = field.substr(0, eq);
    const std::string_view value = field.substr(eq + 1);
    if (key == "seq_len") {
      has_seq = parse_int(value, ds.seq_len) && ds.seq_len > 0;
    } else if (key == "classes") {
      has_classes = true;
      if (!value.empty()) {
        for (const std::string_view id : split_view(value, ',')) {
          CategoryId c = 0;
          if (!parse_int(id, c)) bad_format("dataset header class id '" + std::string(id) + "'");
          ds.class_ids.push_back(c);
        }
      }
    } else if (key == "count") {
      has_count = parse_int(value, count);
    }
  }
  if (!has_seq || !has_classes || !has_count) {
    bad_format("dataset header must carry seq_len=, classes= and count=");
  }
  ds.examples.reserve(count);
  std::string line;
  while (ds.examples.size() < count) {
    if (!std::getline(in, line) || in.eof()) {
      truncated("dataset ends after " + std::to_string(ds.examples.size()) + " of " +
                std::to_string(count) + " rows");
    }
    const auto tab = line.find('\t');
    EncodedQuery ex;
    if (tab == std::string::npos || !parse_int(std::string_view(line).substr(0, tab), ex.label)) {
      truncated("dataset row " + std::to_string(ds.examples.size() + 1) + " is malformed");
    }
    for (const std::string_view id : split_view(std::string_view(line).substr(tab + 1), ' ')) {
      std::int32_t v = 0;
      if (!parse_int(id, v)) truncated("dataset row " + std::to_string(ds.examples.size() + 1) + " id");
      ex.ids.push_back(v);
    }
    if (ex.ids.size() != ds.seq_len) {
      truncated("dataset row " + std::to_string(ds.examples.size() + 1) + " has wrong length");
    }
    ds.examples.push_back(std::move(ex));
  }
  while (std::getline(in, line)) {
    if (!line.empty()) bad_format("dataset has more rows than its header count");
  }
  ds.validate();
  return ds;
}

void save_dataset(const Dataset& dataset, const std::string& path) {
  write_file_atomically(path, [&](std::ostream& out) { write_dataset(out, dataset); });
}

Dataset load_dataset(const std::string& path) {
  std::istringstream in(read_file(path));
  return read_dataset(in);
}

void persist_dataset(const Dataset& dataset, const Vocabulary& vocab,
                     const std::string& dataset_path, const std::string& vocab_path) {
  save_vocabulary(vocab, vocab_path);
  save_dataset(dataset, dataset_path);
}

}  // namespace querycat
