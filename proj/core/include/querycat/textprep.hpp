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

// Query normalization, vocabulary, fixed-length integer encoding and the
// on-disk dataset format.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "querycat/ingest.hpp"

namespace querycat {

// Lower-cases, turns punctuation into spaces, collapses whitespace runs and
// trims. Invalid UTF-8 bytes are dropped. Idempotent.
std::string normalize(std::string_view raw);

// Whitespace tokenization of an already normalized query.
std::vector<std::string_view> tokenize(std::string_view normalized);

class Vocabulary {
 public:
  static constexpr std::int32_t kPadId = 0;
  static constexpr std::int32_t kUnkId = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  // Only the two reserved entries.
  Vocabulary();

  // `words` are the real words in id order (ids 2, 3, ...). `max_size`
  // bounds the whole table including the reserved entries.
  Vocabulary(std::vector<std::string> words, std::size_t max_size);

  // Unknown words map to kUnkId.
  std::int32_t id_of(std::string_view word) const;
  const std::string& word(std::int32_t id) const;
  bool contains(std::string_view word) const;

  // Table size including <pad> and <unk>; the embedding row count.
  std::size_t size() const { return id_to_word_.size(); }
  std::size_t max_size() const { return max_size_; }
  const std::vector<std::string>& words() const { return id_to_word_; }

  // FNV-1a over the serialized table; identifies a vocabulary in
  // checkpoints.
  std::string content_hash() const;

  bool operator==(const Vocabulary& other) const {
    return id_to_word_ == other.id_to_word_;
  }

 private:
  std::vector<std::string> id_to_word_;
  std::unordered_map<std::string, std::int32_t> word_to_id_;
  std::size_t max_size_;
};

// Ranks words by descending frequency, ties lexicographically, and keeps the
// top (max_size - 2). Throws InvalidArgument if max_size < 3.
Vocabulary build_vocab(std::span<const std::string> corpus, std::size_t max_size);

// Right-pads with kPadId or truncates to exactly seq_len ids.
std::vector<std::int32_t> encode(std::string_view normalized,
                                 const Vocabulary& vocab, std::size_t seq_len);

struct EncodedQuery {
  std::vector<std::int32_t> ids;
  std::int32_t label = 0;  // class index

  bool operator==(const EncodedQuery&) const = default;
};

struct Dataset {
  std::vector<EncodedQuery> examples;
  std::vector<CategoryId> class_ids;  // class index -> category id
  std::size_t seq_len = 0;

  std::size_t size() const { return examples.size(); }
  std::size_t num_classes() const { return class_ids.size(); }
  // Class index of a category id, or -1.
  std::int32_t class_index(CategoryId category) const;
  // Throws ShapeMismatch / InvalidArgument.
  void validate(std::size_t vocab_rows = 0) const;

  bool operator==(const Dataset&) const = default;
};

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};

// Seeded shuffle of [0, n) cut into ceil(n * ratio) and the remainder.
// Throws InvalidArgument unless 0 < ratio < 1.
SplitIndices split_indices(std::size_t n, double ratio, std::uint64_t seed);

struct DatasetSplit {
  Dataset train;
  Dataset test;
};

DatasetSplit split(const Dataset& dataset, double ratio, std::uint64_t seed);

struct PrepareOptions {
  double train_ratio = 0.5;
  std::uint64_t seed = 1;
  std::size_t max_vocab = 12814;  // 12812 words + <pad> + <unk>
  std::size_t seq_len = 10;
};

struct PreparedData {
  Vocabulary vocab;
  Dataset train;
  Dataset test;
};

// Splits labeled records, builds the vocabulary from the training side only
// and encodes both sides. Class ids are the sorted distinct dominant
// categories over all records.
PreparedData prepare_datasets(std::span<const QueryRecord> records,
                              const PrepareOptions& options);

// "word<TAB>id" lines in ascending id order, reserved entries included.
void write_vocabulary(std::ostream& out, const Vocabulary& vocab);
Vocabulary read_vocabulary(std::istream& in);
void save_vocabulary(const Vocabulary& vocab, const std::string& path);
Vocabulary load_vocabulary(const std::string& path);

// Header "seq_len=<n> classes=<ids> count=<N>", then "label<TAB>ids" rows.
void write_dataset(std::ostream& out, const Dataset& dataset);
Dataset read_dataset(std::istream& in);
void save_dataset(const Dataset& dataset, const std::string& path);
Dataset load_dataset(const std::string& path);

void persist_dataset(const Dataset& dataset, const Vocabulary& vocab,
                     const std::string& dataset_path, const std::string& vocab_path);

}  // namespace querycat
