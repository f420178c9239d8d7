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

#include "querycat/network.hpp"

namespace querycat {

struct MlpShape {
  std::size_t vocab_rows = 2;
  std::size_t embedding_dim = 128;
  std::size_t hidden_layers = 2;
  std::size_t hidden_size = 200;
  std::size_t seq_len = 10;
  std::size_t num_classes = 8;
  Activation activation = Activation::kRelu;

  void validate() const;
};

// Embedding -> flatten (seq_len * dim) -> 1 or 2 hidden layers -> dropout
// on the last hidden layer -> dense softmax. Parameters: "embedding",
// "hidden<i>.weight" / "hidden<i>.bias", "output.weight" / "output.bias".
class Mlp final : public Network {
 public:
  Mlp(const MlpShape& shape, std::uint64_t seed, bool embedding_trainable = true);

  std::string_view kind() const override { return "mlp"; }
  std::size_t seq_len() const override { return shape_.seq_len; }
  std::size_t num_classes() const override { return shape_.num_classes; }
  std::size_t dropout_width() const override { return shape_.hidden_size; }
  Activation activation() const override { return shape_.activation; }

  std::unique_ptr<Network> clone() const override;
  std::unique_ptr<ForwardCache> make_cache() const override;
  Matrix forward(std::span<const EncodedQuery> batch, const Matrix* dropout_scale,
                 ForwardCache* cache) const override;
  void backward(const ForwardCache& cache, Gradients& grads) const override;
  KinkSignature kink_signature(const ForwardCache& cache) const override;

  const MlpShape& shape() const { return shape_; }

 private:
  MlpShape shape_;
};

}  // namespace querycat
