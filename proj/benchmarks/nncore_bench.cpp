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


#include <benchmark/benchmark.h>

#include <vector>

#include "querycat/layers.hpp"
#include "querycat/mlp.hpp"
#include "querycat/optimizer.hpp"
#include "querycat/random.hpp"
#include "querycat/text_cnn.hpp"

namespace querycat {
namespace {

std::vector<EncodedQuery> random_batch(std::size_t size, std::size_t vocab_rows,
                                       std::size_t seq_len, std::size_t classes) {
  Rng rng(1);
  std::vector<EncodedQuery> batch(size);
  for (std::size_t i = 0; i < size; ++i) {
    batch[i].label = static_cast<std::int32_t>(i % classes);
    batch[i].ids.assign(seq_len, 0);
    const std::size_t len = 1 + rng.uniform_index(seq_len);
    for (std::size_t t = 0; t < len; ++t) {
      batch[i].ids[t] = static_cast<std::int32_t>(2 + rng.uniform_index(vocab_rows - 2));
    }
  }
  return batch;
}

void BM_ConvForward(benchmark::State& state) {
  const auto width = static_cast<std::size_t>(state.range(0));
  Rng rng(2);
  ConvFilterBank bank;
  bank.width = width;
  bank.filters = Matrix::NullaryExpr(128, static_cast<Eigen::Index>(width * 128),
                                     [&] { return rng.uniform_open(-0.1, 0.1); });
  bank.biases = Vector::Zero(128);
  const Matrix input = Matrix::NullaryExpr(10, 128, [&] { return rng.uniform_open(-1, 1); });
  for (auto _ : state) {
    benchmark::DoNotOptimize(conv_forward(input, bank, Activation::kRelu));
  }
}
BENCHMARK(BM_ConvForward)->Arg(1)->Arg(2)->Arg(3);

// Default-sized text CNN, one mini-batch of 64.
void BM_TextCnnForward(benchmark::State& state) {
  const TextCnn net(TextCnnShape{12814}, 1);
  const auto batch = random_batch(64, 12814, 10, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(net.forward(batch, nullptr, nullptr));
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TextCnnForward)->Unit(benchmark::kMicrosecond);

void BM_TextCnnTrainStep(benchmark::State& state) {
  TextCnn net(TextCnnShape{12814}, 1);
  net.set_num_threads(static_cast<std::size_t>(state.range(0)));
  const auto batch = random_batch(64, 12814, 10, 8);
  Optimizer adam(OptimizerConfig{});
  Rng rng(3);
  auto cache = net.make_cache();
  Gradients grads;
  for (auto _ : state) {
    const Matrix scale = draw_dropout_scales(64, net.dropout_width(), 0.5, rng);
    net.forward(batch, &scale, cache.get());
    net.backward(*cache, grads);
    adam.step(net.parameters(), grads);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_TextCnnTrainStep)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_MlpTrainStep(benchmark::State& state) {
  Mlp net(MlpShape{12814}, 1);
  const auto batch = random_batch(64, 12814, 10, 8);
  Optimizer adam(OptimizerConfig{});
  Rng rng(3);
  auto cache = net.make_cache();
  Gradients grads;
  for (auto _ : state) {
    const Matrix scale = draw_dropout_scales(64, net.dropout_width(), 0.5, rng);
    net.forward(batch, &scale, cache.get());
    net.backward(*cache, grads);
    adam.step(net.parameters(), grads);
  }
  state.SetItemsProcessed(state.iterations() * 64);
}
BENCHMARK(BM_MlpTrainStep)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace querycat
