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

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "querycat/random.hpp"

namespace querycat {

// All arithmetic is done in double precision; row-major so that a run of
// consecutive embedding rows is one contiguous window.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

enum class Activation { kRelu, kTanh };

const char* to_string(Activation activation);
Activation activation_from_string(const std::string& name);

inline double activate(Activation a, double x) {
  return a == Activation::kRelu ? (x > 0.0 ? x : 0.0) : std::tanh(x);
}

// Derivative expressed through the pre-activation and the output.
inline double activation_grad(Activation a, double pre, double out) {
  return a == Activation::kRelu ? (pre > 0.0 ? 1.0 : 0.0) : 1.0 - out * out;
}

struct EmbeddingMatrix {
  Matrix weights;  // rows = vocabulary table size, cols = embedding dim
  bool trainable = true;
};

// Entries i.i.d. uniform on the open interval (-1, 1).
EmbeddingMatrix init_embedding(std::size_t rows, std::size_t dim, std::uint64_t seed);

// Row i of the result is weights.row(ids[i]). Throws IndexOutOfRange.
Matrix embed(std::span<const std::int32_t> ids, const EmbeddingMatrix& embedding);

// Filters over windows of `width` consecutive rows. Each filter is stored
// flattened as one row of width * dim values: row r of the window occupies
// columns [r * dim, (r + 1) * dim).
struct ConvFilterBank {
  std::size_t width = 1;
  Matrix filters;  // num_filters x (width * dim)
  Vector biases;   // num_filters

  std::size_t num_filters() const { return static_cast<std::size_t>(filters.rows()); }
};

struct FeatureMap {
  Matrix values;  // num_filters x (n - width + 1)
};

// values(j, i) = f(<filter_j, X[i : i + width)> + b_j). Throws ShapeMismatch
// when X has fewer rows than the filter width or the dims disagree.
FeatureMap conv_forward(const Matrix& input, const ConvFilterBank& bank,
                        Activation activation);

struct PooledFeatures {
  Vector values;                    // per-filter maximum
  std::vector<std::size_t> argmax;  // lowest index among equal maxima
};

// Throws ShapeMismatch on a map without columns.
PooledFeatures max_pool(const FeatureMap& map);

enum class DropoutMode { kTrain, kInference };

struct DropoutSpec {
  double keep_prob = 0.5;
  DropoutMode mode = DropoutMode::kTrain;
};

// Per-coordinate multipliers: 1 / keep_prob for kept coordinates, 0 for
// dropped ones.
Vector draw_dropout_scale(std::size_t size, double keep_prob, Rng& rng);

// Inverted dropout; identity in inference mode or when keep_prob == 1.
Vector dropout(const Vector& z, const DropoutSpec& spec, Rng& rng);

struct DenseSoftmaxLayer {
  Matrix weights;  // m x C
  Vector biases;   // C
};

// exp(y - max y), normalized.
Vector softmax(const Vector& logits);

// softmax(W^T z + b). Throws ShapeMismatch.
Vector dense_softmax(const Vector& z, const DenseSoftmaxLayer& layer);

inline constexpr double kProbabilityFloor = 1e-12;

// -ln(max(probs[label], 1e-12)). Throws InvalidArgument on a bad label.
double cross_entropy(const Vector& probs, std::int32_t label);

}  // namespace querycat
