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

#include "querycat/network.hpp"

#include <cmath>

#include "querycat/error.hpp"

namespace querycat {

Parameter& Network::parameter(std::string_view name) {
  for (Parameter& p : params_) {
    if (p.name == name) return p;
  }
  throw Error(ErrorCode::kInvalidArgument, "no parameter named '" + std::string(name) + "'");
}

const Parameter& Network::parameter(std::string_view name) const {
  return const_cast<Network*>(this)->parameter(name);
}

Gradients Network::zero_gradients() const {
  Gradients grads;
  grads.reserve(params_.size());
  for (const Parameter& p : params_) grads.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
  return grads;
}

std::size_t Network::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter& p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

double mean_cross_entropy(const Matrix& probs, std::span<const EncodedQuery> batch) {
  if (batch.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const std::int32_t label = batch[b].label;
    if (label < 0 || label >= probs.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
    }
    total += -std::log(std::max(probs(static_cast<Eigen::Index>(b), label), kProbabilityFloor));
  }
  return total / static_cast<double>(batch.size());
}

std::int32_t argmax_row(const Matrix& probs, Eigen::Index row) {
  Eigen::Index best = 0;
  for (Eigen::Index c = 1; c < probs.cols(); ++c) {
    if (probs(row, c) > probs(row, best)) best = c;
  }
  return static_cast<std::int32_t>(best);
}

Matrix draw_dropout_scales(std::size_t batch, std::size_t width, double keep_prob, Rng& rng) {
  Matrix scales(static_cast<Eigen::Index>(batch), static_cast<Eigen::Index>(width));
  for (std::size_t b = 0; b < batch; ++b) {
    scales.row(static_cast<Eigen::Index>(b)) = draw_dropout_scale(width, keep_prob, rng).transpose();
  }
  return scales;
}

void init_fan_uniform(Matrix& m, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = limit * (2.0 * rng.uniform01() - 1.0);
}

}  // namespace querycat
