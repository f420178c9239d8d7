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

#include "querycat/layers.hpp"

#include <cmath>

#include "querycat/error.hpp"

namespace querycat {

const char* to_string(Activation activation) {
  return activation == Activation::kRelu ? "relu" : "tanh";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw Error(ErrorCode::kInvalidArgument, "unknown activation '" + name + "'");
}

EmbeddingMatrix init_embedding(std::size_t rows, std::size_t dim, std::uint64_t seed) {
  if (rows < 2 || dim < 1) {
    throw Error(ErrorCode::kInvalidArgument, "embedding needs rows >= 2 and dim >= 1");
  }
  Rng rng(seed);
  EmbeddingMatrix e;
  e.weights.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < e.weights.size(); ++i) {
    e.weights.data()[i] = rng.uniform_open(-1.0, 1.0);
  }
  return e;
}

Matrix embed(std::span<const std::int32_t> ids, const EmbeddingMatrix& embedding) {
  const Eigen::Index rows = embedding.weights.rows();
  Matrix out(static_cast<Eigen::Index>(ids.size()), embedding.weights.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || ids[i] >= rows) {
      throw Error(ErrorCode::kIndexOutOfRange, "token id " + std::to_string(ids[i]) +
                                                   " outside embedding of " + std::to_string(rows) +
                                                   " rows");
    }
    out.row(static_cast<Eigen::Index>(i)) = embedding.weights.row(ids[i]);
  }
  return out;
}

FeatureMap conv_forward(const Matrix& input, const ConvFilterBank& bank, Activation activation) {
  const auto n = static_cast<std::size_t>(input.rows());
  const auto dim = static_cast<std::size_t>(input.cols());
  if (bank.width < 1 || n < bank.width) {
    throw Error(ErrorCode::kShapeMismatch, "sequence of " + std::to_string(n) +
                                               " rows is shorter than filter width " +
                                               std::to_string(bank.width));
  }
  if (static_cast<std::size_t>(bank.filters.cols()) != bank.width * dim ||
      bank.biases.size() != bank.filters.rows()) {
    throw Error(ErrorCode::kShapeMismatch, "filter bank does not match input dimension");
  }
  const auto positions = static_cast<Eigen::Index>(n - bank.width + 1);
  const auto window = static_cast<Eigen::Index>(bank.width * dim);
  // Column i is the flattened window starting at row i; row-major storage
  // makes it contiguous, so the windows overlap in memory.
  const Eigen::Map<const Eigen::MatrixXd, 0, Eigen::OuterStride<>> windows(
      input.data(), window, positions, Eigen::OuterStride<>(static_cast<Eigen::Index>(dim)));
  FeatureMap map;
  map.values = bank.filters * windows;
  map.values.colwise() += bank.biases;
  map.values = map.values.unaryExpr([activation](double x) { return activate(activation, x); });
  return map;
}

PooledFeatures max_pool(const FeatureMap& map) {
  if (map.values.cols() == 0) throw Error(ErrorCode::kShapeMismatch, "empty feature map");
  PooledFeatures out;
  out.values.resize(map.values.rows());
  out.argmax.resize(static_cast<std::size_t>(map.values.rows()));
  for (Eigen::Index f = 0; f < map.values.rows(); ++f) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < map.values.cols(); ++i) {
      if (map.values(f, i) > map.values(f, best)) best = i;
    }
    out.values(f) = map.values(f, best);
    out.argmax[static_cast<std::size_t>(f)] = static_cast<std::size_t>(best);
  }
  return out;
}

Vector draw_dropout_scale(std::size_t size, double keep_prob, Rng& rng) {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "keep_prob must be in (0, 1]");
  }
  Vector scale(static_cast<Eigen::Index>(size));
  const double kept = 1.0 / keep_prob;
  for (Eigen::Index i = 0; i < scale.size(); ++i) {
    scale(i) = rng.bernoulli(keep_prob) ? kept : 0.0;
  }
  return scale;
}

Vector dropout(const Vector& z, const DropoutSpec& spec, Rng& rng) {
  if (!(spec.keep_prob > 0.0 && spec.keep_prob <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "keep_prob must be in (0, 1]");
  }
  if (spec.mode == DropoutMode::kInference || spec.keep_prob == 1.0) return z;
  return z.cwiseProduct(draw_dropout_scale(static_cast<std::size_t>(z.size()), spec.keep_prob, rng));
}

Vector softmax(const Vector& logits) {
  const double shift = logits.maxCoeff();
  Vector p = (logits.array() - shift).exp().matrix();
  return p / p.sum();
}

Vector dense_softmax(const Vector& z, const DenseSoftmaxLayer& layer) {
  if (layer.weights.rows() != z.size() || layer.biases.size() != layer.weights.cols()) {
    throw Error(ErrorCode::kShapeMismatch, "dense layer does not match penultimate size");
  }
  const Vector logits = layer.weights.transpose() * z + layer.biases;
  return softmax(logits);
}

double cross_entropy(const Vector& probs, std::int32_t label) {
  if (label < 0 || label >= probs.size()) {
    throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
  }
  return -std::log(std::max(probs(label), kProbabilityFloor));
}

}  // namespace querycat
