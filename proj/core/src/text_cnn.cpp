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

#include "querycat/text_cnn.hpp"

#include <algorithm>
#include <atomic>
#include <functional>
#include <thread>

#include "querycat/error.hpp"

namespace querycat {
namespace {

// Fixed work unit of the forward pass. Chunk boundaries, not the thread
// count, determine every floating-point operation.
constexpr std::size_t kChunk = 32;

struct CnnCache final : ForwardCache {
  std::vector<EncodedQuery> batch;
  Matrix pooled;   // B x m, after activation and max-over-time
  Matrix pre;      // B x m, pre-activation at the argmax window
  std::vector<std::int32_t> argmax;  // B x m window start positions
  Matrix scale;    // B x m dropout multipliers; empty when inference
  Matrix dropped;  // pooled with dropout applied
  Matrix probs;    // B x C
};

// One past the last non-padding token.
std::size_t effective_length(const std::vector<std::int32_t>& ids) {
  std::size_t n = ids.size();
  while (n > 0 && ids[n - 1] == Vocabulary::kPadId) --n;
  return n;
}

void run_chunks(std::size_t chunks, std::size_t threads,
                const std::function<void(std::size_t)>& body) {
  if (threads <= 1 || chunks <= 1) {
    for (std::size_t c = 0; c < chunks; ++c) body(c);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::jthread> pool;
  const std::size_t n = std::min(threads, chunks);
  for (std::size_t t = 0; t < n; ++t) {
    pool.emplace_back([&] {
      for (std::size_t c = next++; c < chunks; c = next++) body(c);
    });
  }
}

}  // namespace

void TextCnnShape::validate() const {
  const auto fail = [](const std::string& why) { throw Error(ErrorCode::kInvalidArgument, why); };
  if (vocab_rows < 2) fail("vocab_rows must be >= 2");
  if (embedding_dim < 1) fail("embedding_dim must be >= 1");
  if (filter_widths.empty()) fail("at least one filter width is required");
  if (filters_per_width < 1) fail("filters_per_width must be >= 1");
  if (num_classes < 2) fail("num_classes must be >= 2");
  if (seq_len < 1) fail("seq_len must be >= 1");
  for (const std::size_t h : filter_widths) {
    if (h < 1 || h > seq_len) fail("filter width " + std::to_string(h) + " outside [1, seq_len]");
  }
}

TextCnn::TextCnn(const TextCnnShape& shape, std::uint64_t seed, bool embedding_trainable)
    : shape_(shape) {
  shape_.validate();
  const auto k = shape_.embedding_dim;
  const auto F = static_cast<Eigen::Index>(shape_.filters_per_width);
  EmbeddingMatrix embedding = init_embedding(shape_.vocab_rows, k, seed);
  params_.push_back({"embedding", std::move(embedding.weights), embedding_trainable});

  Rng rng(seed ^ 0x9e3779b97f4a7c15ULL);
  for (const std::size_t h : shape_.filter_widths) {
    Matrix w(F, static_cast<Eigen::Index>(h * k));
    init_fan_uniform(w, h * k, shape_.filters_per_width, rng);
    params_.push_back({"conv" + std::to_string(h) + ".weight", std::move(w), true});
    params_.push_back({"conv" + std::to_string(h) + ".bias", Matrix::Zero(1, F), true});
  }
  const auto m = static_cast<Eigen::Index>(penultimate_size());
  const auto C = static_cast<Eigen::Index>(shape_.num_classes);
  Matrix dense(m, C);
  init_fan_uniform(dense, penultimate_size(), shape_.num_classes, rng);
  params_.push_back({"dense.weight", std::move(dense), true});
  params_.push_back({"dense.bias", Matrix::Zero(1, C), true});
}

std::unique_ptr<Network> TextCnn::clone() const { return std::make_unique<TextCnn>(*this); }

std::unique_ptr<ForwardCache> TextCnn::make_cache() const { return std::make_unique<CnnCache>(); }

EmbeddingMatrix TextCnn::embedding() const { return {params_[0].value, params_[0].trainable}; }

ConvFilterBank TextCnn::filter_bank(std::size_t width_index) const {
  ConvFilterBank bank;
  bank.width = shape_.filter_widths.at(width_index);
  bank.filters = params_[1 + 2 * width_index].value;
  bank.biases = params_[2 + 2 * width_index].value.row(0).transpose();
  return bank;
}

DenseSoftmaxLayer TextCnn::dense_layer() const {
  const std::size_t base = 1 + 2 * shape_.filter_widths.size();
  return {params_[base].value, params_[base + 1].value.row(0).transpose()};
}

Matrix TextCnn::forward(std::span<const EncodedQuery> batch, const Matrix* dropout_scale,
                        ForwardCache* cache) const {
  const std::size_t n = shape_.seq_len;
  const std::size_t k = shape_.embedding_dim;
  const std::size_t F = shape_.filters_per_width;
  const std::size_t m = penultimate_size();
  const auto B = static_cast<Eigen::Index>(batch.size());
  const Matrix& E = params_[0].value;
  const auto rows = static_cast<std::int32_t>(E.rows());

  for (std::size_t b = 0; b < batch.size(); ++b) {
    if (batch[b].ids.size() != n) {
      throw Error(ErrorCode::kShapeMismatch, "example has " + std::to_string(batch[b].ids.size()) +
                                                 " ids, model expects " + std::to_string(n));
    }
    for (const std::int32_t id : batch[b].ids) {
      if (id < 0 || id >= rows) {
        throw Error(ErrorCode::kIndexOutOfRange, "token id " + std::to_string(id));
      }
    }
  }
  if (dropout_scale && (dropout_scale->rows() != B ||
                        dropout_scale->cols() != static_cast<Eigen::Index>(m))) {
    throw Error(ErrorCode::kShapeMismatch, "dropout scale shape");
  }

  Matrix pooled(B, static_cast<Eigen::Index>(m));
  Matrix pre(B, static_cast<Eigen::Index>(m));
  std::vector<std::int32_t> argmax(batch.size() * m);

  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  run_chunks(chunks, num_threads_, [&](std::size_t chunk) {
    const std::size_t b0 = chunk * kChunk;
    const std::size_t b1 = std::min(batch.size(), b0 + kChunk);
    std::vector<std::size_t> live(b1 - b0);
    for (std::size_t b = b0; b < b1; ++b) live[b - b0] = effective_length(batch[b].ids);

    for (std::size_t w = 0; w < shape_.filter_widths.size(); ++w) {
      const std::size_t h = shape_.filter_widths[w];
      const std::size_t positions = n - h + 1;
      const Matrix& filters = params_[1 + 2 * w].value;
      const auto bias = params_[2 + 2 * w].value.row(0);

      // Windows that touch at least one real token, plus the first
      // all-padding window when there is one.
      std::vector<std::size_t> count(b1 - b0), offset(b1 - b0);
      std::size_t cols = 0;
      for (std::size_t i = 0; i < count.size(); ++i) {
        count[i] = std::min(positions, live[i] + 1);
        offset[i] = cols;
        cols += count[i];
      }
      Eigen::MatrixXd windows(static_cast<Eigen::Index>(h * k), static_cast<Eigen::Index>(cols));
      for (std::size_t i = 0; i < count.size(); ++i) {
        const auto& ids = batch[b0 + i].ids;
        for (std::size_t s = 0; s < count[i]; ++s) {
          auto col = windows.col(static_cast<Eigen::Index>(offset[i] + s));
          for (std::size_t r = 0; r < h; ++r) {
            col.segment(static_cast<Eigen::Index>(r * k), static_cast<Eigen::Index>(k)) =
                E.row(ids[s + r]).transpose();
          }
        }
      }
      const Eigen::MatrixXd out = filters * windows;

      for (std::size_t i = 0; i < count.size(); ++i) {
        const auto b = static_cast<Eigen::Index>(b0 + i);
        for (std::size_t f = 0; f < F; ++f) {
          const auto fi = static_cast<Eigen::Index>(f);
          double best_pre = out(fi, static_cast<Eigen::Index>(offset[i])) + bias(fi);
          double best = activate(shape_.activation, best_pre);
          std::size_t best_pos = 0;
          for (std::size_t s = 1; s < count[i]; ++s) {
            const double p = out(fi, static_cast<Eigen::Index>(offset[i] + s)) + bias(fi);
            const double v = activate(shape_.activation, p);
            if (v > best) {
              best = v;
              best_pre = p;
              best_pos = s;
            }
          }
          const auto col = static_cast<Eigen::Index>(w * F + f);
          pooled(b, col) = best;
          pre(b, col) = best_pre;
          argmax[static_cast<std::size_t>(b) * m + w * F + f] = static_cast<std::int32_t>(best_pos);
        }
      }
    }
  });

  Matrix dropped = dropout_scale ? Matrix(pooled.cwiseProduct(*dropout_scale)) : pooled;
  const std::size_t dense_index = 1 + 2 * shape_.filter_widths.size();
  Matrix logits = dropped * params_[dense_index].value;
  logits.rowwise() += params_[dense_index + 1].value.row(0);
  Matrix probs(logits.rows(), logits.cols());
  for (Eigen::Index b = 0; b < logits.rows(); ++b) {
    probs.row(b) = softmax(logits.row(b).transpose()).transpose();
  }

  if (cache) {
    auto* c = dynamic_cast<CnnCache*>(cache);
    if (!c) throw Error(ErrorCode::kStateMissing, "cache was not made by this network kind");
    c->batch.assign(batch.begin(), batch.end());
    c->pooled = std::move(pooled);
    c->pre = std::move(pre);
    c->argmax = std::move(argmax);
    c->scale = dropout_scale ? *dropout_scale : Matrix();
    c->dropped = std::move(dropped);
    c->probs = probs;
    c->valid = true;
  }
  return probs;
}

void TextCnn::backward(const ForwardCache& cache, Gradients& grads) const {
  const auto* c = dynamic_cast<const CnnCache*>(&cache);
  if (!c || !c->valid) throw Error(ErrorCode::kStateMissing, "backward() without a cached forward pass");

  bool congruent = grads.size() == params_.size();
  for (std::size_t i = 0; congruent && i < params_.size(); ++i) {
    congruent = grads[i].rows() == params_[i].value.rows() && grads[i].cols() == params_[i].value.cols();
  }
  if (congruent) {
    for (Matrix& g : grads) g.setZero();
  } else {
    grads = zero_gradients();
  }
  if (c->batch.empty()) return;

  const std::size_t k = shape_.embedding_dim;
  const std::size_t F = shape_.filters_per_width;
  const std::size_t m = penultimate_size();
  const auto B = static_cast<Eigen::Index>(c->batch.size());
  const Matrix& E = params_[0].value;
  const bool embedding_trainable = params_[0].trainable;

  Matrix dlogits = c->probs;
  for (Eigen::Index b = 0; b < B; ++b) {
    const std::int32_t label = c->batch[static_cast<std::size_t>(b)].label;
    if (label < 0 || label >= dlogits.cols()) {
      throw Error(ErrorCode::kInvalidArgument, "label " + std::to_string(label) + " out of range");
    }
    dlogits(b, label) -= 1.0;
  }
  dlogits /= static_cast<double>(B);

  const std::size_t dense_index = 1 + 2 * shape_.filter_widths.size();
  grads[dense_index].noalias() = c->dropped.transpose() * dlogits;
  grads[dense_index + 1] = dlogits.colwise().sum();

  Matrix dz = dlogits * params_[dense_index].value.transpose();
  if (c->scale.size() != 0) dz = dz.cwiseProduct(c->scale);

  for (Eigen::Index b = 0; b < B; ++b) {
    const auto& ids = c->batch[static_cast<std::size_t>(b)].ids;
    for (std::size_t w = 0; w < shape_.filter_widths.size(); ++w) {
      const std::size_t h = shape_.filter_widths[w];
      const Matrix& filters = params_[1 + 2 * w].value;
      Matrix& dfilters = grads[1 + 2 * w];
      Matrix& dbias = grads[2 + 2 * w];
      for (std::size_t f = 0; f < F; ++f) {
        const auto col = static_cast<Eigen::Index>(w * F + f);
        const double g = dz(b, col) *
                         activation_grad(shape_.activation, c->pre(b, col), c->pooled(b, col));
        if (g == 0.0) continue;
        const auto s = static_cast<std::size_t>(c->argmax[static_cast<std::size_t>(b) * m + w * F + f]);
        const auto fi = static_cast<Eigen::Index>(f);
        dbias(0, fi) += g;
        for (std::size_t r = 0; r < h; ++r) {
          const auto seg = static_cast<Eigen::Index>(r * k);
          const auto len = static_cast<Eigen::Index>(k);
          const std::int32_t id = ids[s + r];
          dfilters.row(fi).segment(seg, len) += g * E.row(id);
          if (embedding_trainable) grads[0].row(id) += g * filters.row(fi).segment(seg, len);
        }
      }
    }
  }
}

KinkSignature TextCnn::kink_signature(const ForwardCache& cache) const {
  const auto* c = dynamic_cast<const CnnCache*>(&cache);
  if (!c || !c->valid) throw Error(ErrorCode::kStateMissing, "no cached forward pass");
  KinkSignature sig;
  sig.pattern.reserve(c->argmax.size() * 2);
  const bool relu = shape_.activation == Activation::kRelu;
  for (Eigen::Index b = 0; b < c->pre.rows(); ++b) {
    for (Eigen::Index j = 0; j < c->pre.cols(); ++j) {
      sig.pattern.push_back(c->argmax[static_cast<std::size_t>(b * c->pre.cols() + j)]);
      if (relu) {
        const double p = c->pre(b, j);
        sig.pattern.push_back(p > 0.0 ? 1 : 0);
        sig.min_abs_relu_input = std::min(sig.min_abs_relu_input, std::abs(p));
      }
    }
  }
  return sig;
}

}  // namespace querycat
