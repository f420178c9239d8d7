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

// Model assembly, the training loop, evaluation and prediction.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "querycat/network.hpp"
#include "querycat/optimizer.hpp"
#include "querycat/textprep.hpp"

namespace querycat {

struct TrainingConfig {
  std::size_t batch_size = 64;
  std::size_t epochs = 100;
  double keep_prob = 0.5;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  // Return the parameters of the epoch with the best eval accuracy instead
  // of the final epoch.
  bool best_on_eval = false;
  std::size_t num_threads = 1;

  void validate() const;
};

struct CnnConfig {
  std::size_t embedding_dim = 128;
  std::vector<std::size_t> filter_widths{1, 2, 3};
  std::size_t filters_per_width = 128;
  std::size_t seq_len = 10;
  std::size_t n_classes = 8;
  Activation activation = Activation::kRelu;
  bool embedding_trainable = true;
  TrainingConfig training;

  void validate() const;
};

struct MlpConfig {
  std::size_t hidden_layers = 2;
  std::size_t hidden_size = 200;
  std::size_t embedding_dim = 128;
  std::size_t seq_len = 10;
  std::size_t n_classes = 8;
  Activation activation = Activation::kRelu;
  bool embedding_trainable = true;
  TrainingConfig training;

  void validate() const;
};

using ModelConfig = std::variant<CnnConfig, MlpConfig>;

const TrainingConfig& training_config(const ModelConfig& config);

// A network together with what is needed to interpret its outputs.
struct Classifier {
  ModelConfig config;
  std::unique_ptr<Network> network;
  std::vector<CategoryId> class_ids;  // class index -> category id
  std::string vocab_hash;             // empty: not bound to a vocabulary

  Classifier() = default;
  Classifier(ModelConfig config, std::unique_ptr<Network> network);
  Classifier(const Classifier& other);
  Classifier& operator=(const Classifier& other);
  Classifier(Classifier&&) noexcept = default;
  Classifier& operator=(Classifier&&) noexcept = default;

  // Attach dataset classes and the vocabulary the inputs were encoded with.
  void bind(const Dataset& dataset, const Vocabulary& vocab);
};

// Throws InvalidArgument.
Classifier build_cnn(const CnnConfig& config, std::size_t vocab_rows, std::uint64_t seed);
Classifier build_mlp(const MlpConfig& config, std::size_t vocab_rows, std::uint64_t seed);

struct MetricsRow {
  std::size_t step = 0;
  std::size_t epoch = 0;
  std::string split;  // "train" (per step) or "eval" (per epoch)
  double loss = 0.0;
  double accuracy = 0.0;
};

// Rows in emission order; steps strictly increase within each split.
struct MetricsCurve {
  std::vector<MetricsRow> rows;

  std::vector<MetricsRow> split_rows(std::string_view split) const;
  // CSV "step,epoch,split,loss,accuracy" with six decimals.
  void write_csv(std::ostream& out) const;
  void save_csv(const std::string& path) const;
};

// Runs epochs * ceil(N / batch_size) optimizer steps with a seeded shuffle
// per epoch, keeping the last partial batch. Dropout is active only on
// training steps. One eval row per epoch when eval_set is non-empty. One
// log line per epoch goes to `log` when given.
//
// Throws ConfigMismatch when datasets and model disagree on seq_len or
// class ids.
MetricsCurve train(Classifier& model, const Dataset& train_set, const Dataset& eval_set,
                   std::ostream* log = nullptr);

struct EvalResult {
  double accuracy = 0.0;
  double mean_loss = 0.0;
  // confusion[true][predicted]
  std::vector<std::vector<std::size_t>> confusion;
  std::vector<std::size_t> support;
  std::size_t count = 0;
};

// Dropout disabled; argmax with lowest class index on exact ties.
EvalResult evaluate(const Classifier& model, const Dataset& dataset);

void write_eval_report(std::ostream& out, const EvalResult& result,
                       const std::vector<CategoryId>& class_ids);

struct Prediction {
  CategoryId category_id = 0;
  double probability = 0.0;

  bool operator==(const Prediction&) const = default;
};

// normalize -> encode -> forward. Full distribution, probability
// descending, ties by ascending category id. Throws VocabHashMismatch and
// EmptyQuery.
std::vector<Prediction> predict(const Classifier& model, std::string_view query_raw,
                                const Vocabulary& vocab);

// Checkpoint round trip. Parameters are stored as float32.
void save_model(const Classifier& model, const std::string& path);
Classifier load_model(const std::string& path);
Classifier read_model(std::istream& in);
// load_model plus a VocabHashMismatch guard.
Classifier load_model(const std::string& path, const Vocabulary& vocab);

}  // namespace querycat
