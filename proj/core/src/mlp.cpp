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

#include "querycat/mlp.hpp"

#include "querycat/error.hpp"

namespace querycat {
namespace {

struct MlpCache final : ForwardCache {
  std::vector<EncodedQuery> batch;
  Matrix input;                     // B x (seq_len * dim)
  std::vector<Matrix> pre;          // per hidden layer, B x H
  std::vector<Matrix> hidden;       // per hidden layer, after activation
  Matrix scale;                     // B x H dropout multipliers, or empty
  Matrix dropped;                   // last hidden layer after dropout
  Matrix probs;                     // B x C
};

}  // namespace

void MlpShape::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); };
  if (vocab_rows < 2) fail("vocab_rows must be >= 2");
  if (embedding_dim < 1) fail("embedding_dim must be >= 1");
  if (hidden_layers != 1 && hidden_layers != 2) fail("hidden_layers must be 1 or 2");
  if (hidden_size < 1) fail("hidden_size must be >= 1");
  if (seq_len < 1) fail("seq_len must be >= 1");
  if (num_classes < 2) fail("num_classes must be >= 2");
}

Mlp::Mlp(const MlpShape& shape, std::uint64_t seed, bool embedding_trainable) : shape_(shape) {
  shape_.validate();
  EmbeddingMatrix embedding = init_embedding(shape_.vocab_rows, shape_.embedding_dim, seed);
  params_.push_back({"embedding", std::move(embedding.weights), embedding_trainable});

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  const auto H = static_cast<Eigen::Index>(shape_.hidden_size);
  std::size_t fan_in = shape_.seq_len * shape_.embedding_dim;
  for (std::size_t layer = 1; layer <= shape_.hidden_layers; ++layer) {
    Matrix w(static_cast<Eigen::Index>(fan_in), H);
    init_fan_uniform(w, fan_in, shape_.hidden_size, rng);
    params_.push_back({"hidden" + std::to_string(layer) + ".weight", std::move(w), true});
    params_.push_back({"hidden" + std::to_string(layer) + ".bias", Matrix::Zero(1, H), true});
    fan_in = shape_.hidden_size;
  }
  const auto C = static_cast<Eigen::Index>(shape_.num_classes);
  Matrix out(H, C);
  init_fan_uniform(out, shape_.hidden_size, shape_.num_classes, rng);
  params_.push_back({"output.weight", std::move(out), true});
  params_.push_back({"output.bias", Matrix::Zero(1, C), true});
}

std::unique_ptr<Network> Mlp::clone() const { return std::make_unique<Mlp>(*this); }

std::unique_ptr<ForwardCache> Mlp::make_cache() const { return std::make_unique<MlpCache>(); }

Matrix Mlp::forward(std::span<const EncodedQuery> batch, const Matrix* dropout_scale,
                    ForwardCache* cache) const {
  const std::size_t n = shape_.seq_len;
  const auto k = static_cast<Eigen::Index>(shape_.embedding_dim);
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Matrix& E = params_[0].value;

  Matrix input(B, static_cast<Eigen::Index>(n) * k);
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& ids = batch[static_cast<std::size_t>(b)].ids;
    if (ids.size() != n) {
      throw Error(ErrorCode::kShapeMismatch, "example has " + std::to_string(ids.size()) +
                                                 " ids, model expects " + std::to_string(n));
    }
    for (std::size_t p = 0; p < n; ++p) {
      if (ids[p] < 0 || ids[p] >= E.rows()) {
        throw Error(ErrorCode::kIndexOutOfRange, "token id " + std::to_string(ids[p]));
      }
      input.row(b).segment(static_cast<Eigen::Index>(p) * k, k) = E.row(ids[p]);
    }
  }
  if (dropout_scale && (dropout_scale->rows() != B ||
                        dropout_scale->cols() != static_cast<Eigen::Index>(shape_.hidden_size))) {
    throw Error(ErrorCode::kShapeMismatch, "dropout scale shape");
  }

  std::vector<Matrix> pre, hidden;
  const Matrix* x = &input;
  for (std::size_t layer = 0; layer < shape_.hidden_layers; ++layer) {
    Matrix a = *x * params_[1 + 2 * layer].value;
    a.rowwise() += params_[2 + 2 * layer].value.row(0);
    Matrix h = a.unaryExpr([this](double v) { return activate(shape_.activation, v); });
    pre.push_back(std::move(a));
    hidden.push_back(std::move(h));
    x = &hidden.back();
  }
  Matrix dropped = dropout_scale ? Matrix(hidden.back().cwiseProduct(*dropout_scale)) : hidden.back();
  const std::size_t out_index = 1 + 2 * shape_.hidden_layers;
  Matrix logits = dropped * params_[out_index].value;
  logits.rowwise() += params_[out_index + 1].value.row(0);
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < B; ++b) {
    probs.row(b) = softmax(logits.row(b).transpose()).transpose();
  }

  if (cache) {
    auto* c = dynamic_cast<MlpCache*>(cache);
    if (!c) throw Error(ErrorCode::kStateMissing, "cache was not made by this network kind");
    c->batch.assign(batch.begin(), batch.end());
    c->input = std::move(input);
    c->pre = std::move(pre);
    c->hidden = std::move(hidden);
    c->scale = dropout_scale ? *dropout_scale : Matrix();
    c->dropped = std::move(dropped);
    c->probs = probs;
    c->valid = true;
  }
  return probs;
}

void Mlp::backward(const ForwardCache& cache, Gradients& grads) const {
  const auto* c = dynamic_cast<const MlpCache*>(&cache);
  if (!c || !c->valid) throw Error(ErrorCode::kStateMissing, "backward() without a cached forward pass");
  grads = zero_gradients();
  if (c->batch.empty()) return;

  const auto B = static_cast<Eigen::Index>(c->batch.size());
  const auto k = static_cast<Eigen::Index>(shape_.embedding_dim);
  Matrix delta = c->probs;
  for (Eigen::Index b = 0; b < B; ++b) {
    const std::int32_t label = c->batch[static_cast<std::size_t>(b)].label;
    if (label < 0 || label >= delta.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
    }
    delta(b, label) -= 1.0;
  }
  delta /= static_cast<double>(B);

  const std::size_t out_index = 1 + 2 * shape_.hidden_layers;
  grads[out_index].noalias() = c->dropped.transpose() * delta;
  grads[out_index + 1] = delta.colwise().sum();
  Matrix upstream = delta * params_[out_index].value.transpose();
  if (c->scale.size() != 0) upstream = upstream.cwiseProduct(c->scale);

  for (std::size_t layer = shape_.hidden_layers; layer-- > 0;) {
    const Matrix& a = c->pre[layer];
    const Matrix& h = c->hidden[layer];
    Matrix da(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      da.data()[i] = upstream.data()[i] * activation_grad(shape_.activation, a.data()[i], h.data()[i]);
    }
    const Matrix& below = layer == 0 ? c->input : c->hidden[layer - 1];
    grads[1 + 2 * layer].noalias() = below.transpose() * da;
    grads[2 + 2 * layer] = da.colwise().sum();
    upstream = da * params_[1 + 2 * layer].value.transpose();
  }

  if (!params_[0].trainable) return;
  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& ids = c->batch[static_cast<std::size_t>(b)].ids;
    for (std::size_t p = 0; p < ids.size(); ++p) {
      grads[0].row(ids[p]) += upstream.row(b).segment(static_cast<Eigen::Index>(p) * k, k);
    }
  }
}

KinkSignature Mlp::kink_signature(const ForwardCache& cache) const {
  const auto* c = dynamic_cast<const MlpCache*>(&cache);
  if (!c || !c->valid) throw Error(ErrorCode::kStateMissing, "no cached forward pass");
  KinkSignature sig;
  if (shape_.activation != Activation::kRelu) return sig;
  for (const Matrix& a : c->pre) {
    for (Eigen::Index i = 0; i < a.size(); ++i) {
      sig.pattern.push_back(a.data()[i] > 0.0 ? 1 : 0);
      sig.min_abs_relu_input = std::min(sig.min_abs_relu_input, std::abs(a.data()[i]));
    }
  }
  return sig;
}

}  // namespace querycat
