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

#include "querycat/grad_check.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "querycat/error.hpp"
#include "querycat/mlp.hpp"
#include "querycat/text_cnn.hpp"

namespace querycat {

GradCheckResult grad_check(const Network& network, std::span<const EncodedQuery> batch,
                           double epsilon, const Matrix* dropout_scale, const Gradients* analytic) {
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "epsilon must be > 0");
  std::unique_ptr<Network> probe = network.clone();
  std::unique_ptr<ForwardCache> cache = probe->make_cache();

  probe->forward(batch, dropout_scale, cache.get());
  const KinkSignature base = probe->kink_signature(*cache);
  Gradients own;
  if (!analytic) {
    probe->backward(*cache, own);
    analytic = &own;
  }
  if (analytic->size() != probe->parameters().size()) {
    throw Error(ErrorCode::kShapeMismatch, "analytic gradient count");
  }

  const bool relu = probe->activation() == Activation::kRelu;
  const auto loss_at = [&](Matrix& tensor, Eigen::Index i, double value, bool& kinked) {
    const double saved = tensor.data()[i];
    tensor.data()[i] = value;
    const Matrix probs = probe->forward(batch, dropout_scale, cache.get());
    tensor.data()[i] = saved;
    const KinkSignature sig = probe->kink_signature(*cache);
    if (!sig.same_piece(base) || (relu && sig.min_abs_relu_input < 10.0 * epsilon)) kinked = true;
    return mean_cross_entropy(probs, batch);
  };

  GradCheckResult result;
  auto& params = probe->parameters();
  for (std::size_t p = 0; p < params.size(); ++p) {
    if (!params[p].trainable) continue;
    Matrix& tensor = params[p].value;
    const Matrix& grad = (*analytic)[p];
    if (grad.rows() != tensor.rows() || grad.cols() != tensor.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "analytic gradient shape for '" + params[p].name + "'");
    }
    for (Eigen::Index i = 0; i < tensor.size(); ++i) {
      const double theta = tensor.data()[i];
      bool kinked = false;
      const double up = loss_at(tensor, i, theta + epsilon, kinked);
      const double down = loss_at(tensor, i, theta - epsilon, kinked);
      if (kinked) {
        ++result.skipped;
        continue;
      }
      const double numeric = (up - down) / (2.0 * epsilon);
      const double a = grad.data()[i];
      const double rel =
          std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      ++result.checked;
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = params[p].name;
        result.worst_index = static_cast<std::size_t>(i);
      }
    }
  }
  return result;
}

TinyGradCheck run_tiny_grad_check(double epsilon, std::uint64_t seed, Activation activation) {
  const auto started = std::chrono::steady_clock::now();
  constexpr std::size_t kVocab = 20;
  constexpr std::size_t kSeqLen = 5;
  constexpr std::size_t kClasses = 3;
  constexpr std::size_t kBatch = 6;

  Rng rng(seed);
  std::vector<EncodedQuery> batch(kBatch);
  for (EncodedQuery& q : batch) {
    const std::size_t length = 1 + static_cast<std::size_t>(rng.uniform_index(kSeqLen));
    q.ids.assign(kSeqLen, Vocabulary::kPadId);
    for (std::size_t i = 0; i < length; ++i) {
      q.ids[i] = static_cast<std::int32_t>(1 + rng.uniform_index(kVocab - 1));
    }
    q.label = static_cast<std::int32_t>(rng.uniform_index(kClasses));
  }

  TinyGradCheck out;
  const TextCnn cnn(TextCnnShape{kVocab, 4, {1, 2}, 2, kSeqLen, kClasses, activation}, seed);
  const Matrix cnn_scale = draw_dropout_scales(kBatch, cnn.dropout_width(), 0.5, rng);
  out.cnn = grad_check(cnn, batch, epsilon, &cnn_scale);

  const Mlp mlp(MlpShape{kVocab, 4, 1, 5, kSeqLen, kClasses, activation}, seed + 1);
  const Matrix mlp_scale = draw_dropout_scales(kBatch, mlp.dropout_width(), 0.5, rng);
  out.mlp = grad_check(mlp, batch, epsilon, &mlp_scale);

  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

}  // namespace querycat
