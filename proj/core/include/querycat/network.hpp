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
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "querycat/layers.hpp"
#include "querycat/textprep.hpp"

namespace querycat {

struct Parameter {
  std::string name;
  Matrix value;
  bool trainable = true;
};

// One tensor per parameter, same order and shapes as Network::parameters().
using Gradients = std::vector<Matrix>;

// Per-batch state recorded by a forward pass for the backward pass.
class ForwardCache {
 public:
  virtual ~ForwardCache() = default;
  bool valid = false;
};

// Describes where the piecewise-linear parts of a forward pass landed
// (pooling argmaxes, ReLU on/off). Two passes with equal signatures lie on
// the same smooth piece.
struct KinkSignature {
  std::vector<std::int64_t> pattern;
  double min_abs_relu_input = std::numeric_limits<double>::infinity();

  bool same_piece(const KinkSignature& other) const { return pattern == other.pattern; }
};

class Network {
 public:
  virtual ~Network() = default;

  virtual std::string_view kind() const = 0;
  virtual std::size_t seq_len() const = 0;
  virtual std::size_t num_classes() const = 0;
  // Length of the vector dropout is applied to.
  virtual std::size_t dropout_width() const = 0;
  virtual Activation activation() const = 0;

  virtual std::unique_ptr<Network> clone() const = 0;
  virtual std::unique_ptr<ForwardCache> make_cache() const = 0;

  // Returns batch x num_classes probabilities. `dropout_scale` is either
  // null (inference) or batch x dropout_width() multipliers from
  // draw_dropout_scale. When `cache` is non-null it receives what backward()
  // needs. Throws ShapeMismatch / IndexOutOfRange on malformed input.
  virtual Matrix forward(std::span<const EncodedQuery> batch, const Matrix* dropout_scale,
                         ForwardCache* cache) const = 0;

  // Gradient of the mean cross-entropy of the cached batch. Overwrites
  // `grads`. Throws StateMissing if the cache holds no forward pass.
  virtual void backward(const ForwardCache& cache, Gradients& grads) const = 0;

  virtual KinkSignature kink_signature(const ForwardCache& cache) const = 0;

  std::vector<Parameter>& parameters() { return params_; }
  const std::vector<Parameter>& parameters() const { return params_; }
  Parameter& parameter(std::string_view name);
  const Parameter& parameter(std::string_view name) const;

  Gradients zero_gradients() const;
  std::size_t parameter_count() const;

 protected:
  std::vector<Parameter> params_;
};

// Mean of cross_entropy over the batch rows.
double mean_cross_entropy(const Matrix& probs, std::span<const EncodedQuery> batch);

// Index of the row maximum; lowest index on exact ties.
std::int32_t argmax_row(const Matrix& probs, Eigen::Index row);

// batch x width matrix of draw_dropout_scale rows, drawn in row order.
Matrix draw_dropout_scales(std::size_t batch, std::size_t width, double keep_prob, Rng& rng);

// Glorot-style symmetric uniform init with limit sqrt(6 / (fan_in + fan_out)).
void init_fan_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng);

}  // namespace querycat
