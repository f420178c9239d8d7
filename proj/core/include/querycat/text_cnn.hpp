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

#include <cstddef>
#include <cstdint>
#include <memory>
#include <vector>

#include "querycat/network.hpp"

namespace querycat {

struct TextCnnShape {
  std::size_t vocab_rows = 2;
  std::size_t embedding_dim = 128;
  std::vector<std::size_t> filter_widths{1, 2, 3};
  std::size_t filters_per_width = 128;
  std::size_t seq_len = 10;
  std::size_t num_classes = 8;
  Activation activation = Activation::kRelu;

  void validate() const;
};

// Embedding -> one convolution bank per filter width -> max-over-time
// pooling -> concatenation (penultimate layer) -> dropout -> dense softmax.
//
// Parameters, in order: "embedding", then "conv<h>.weight" / "conv<h>.bias"
// per width h, then "dense.weight" (m x C) and "dense.bias" (1 x C).
//
// Windows made only of trailing padding all produce the same features, so
// the forward pass evaluates the first of them and skips the rest; the
// pooled result (including the lowest-index tie rule) is unchanged.
class TextCnn final : public Network {
 public:
  TextCnn(const TextCnnShape& shape, std::uint64_t seed, bool embedding_trainable = true);

  std::string_view kind() const override { return "cnn"; }
  std::size_t seq_len() const override { return shape_.seq_len; }
  std::size_t num_classes() const override { return shape_.num_classes; }
  std::size_t dropout_width() const override { return penultimate_size(); }
  Activation activation() const override { return shape_.activation; }

  std::unique_ptr<Network> clone() const override;
  std::unique_ptr<ForwardCache> make_cache() const override;
  Matrix forward(std::span<const EncodedQuery> batch, const Matrix* dropout_scale,
                 ForwardCache* cache) const override;
  void backward(const ForwardCache& cache, Gradients& grads) const override;
  KinkSignature kink_signature(const ForwardCache& cache) const override;

  const TextCnnShape& shape() const { return shape_; }
  std::size_t penultimate_size() const {
    return shape_.filters_per_width * shape_.filter_widths.size();
  }

  // Views of the parameters as the layer types.
  EmbeddingMatrix embedding() const;
  ConvFilterBank filter_bank(std::size_t width_index) const;
  DenseSoftmaxLayer dense_layer() const;

  // Worker threads for the forward pass. Examples are processed in fixed
  // chunks, so results do not depend on this value.
  void set_num_threads(std::size_t n) { num_threads_ = n == 0 ? 1 : n; }

 private:
  TextCnnShape shape_;
  std::size_t num_threads_ = 1;
};

}  // namespace querycat
