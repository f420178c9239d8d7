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
#include <span>
#include <string>

#include "querycat/network.hpp"

namespace querycat {

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t worst_index = 0;
  std::size_t checked = 0;
  // Coordinates whose +/- epsilon probes crossed a ReLU or pooling kink.
  std::size_t skipped = 0;
};

// Compares the analytic gradient of the mean cross-entropy on `batch` with
// central differences (L(t + eps) - L(t - eps)) / 2 eps for every trainable
// coordinate, returning max |a - n| / max(|a|, |n|, 1e-8).
//
// The dropout multipliers, if any, are held fixed across all evaluations.
// `analytic` overrides the network's own backward pass (negative controls).
GradCheckResult grad_check(const Network& network, std::span<const EncodedQuery> batch,
                           double epsilon, const Matrix* dropout_scale = nullptr,
                           const Gradients* analytic = nullptr);

struct TinyGradCheck {
  GradCheckResult cnn;
  GradCheckResult mlp;
  double seconds = 0.0;
};

// The reference finite-difference suite: a CNN with vocabulary 20, embedding
// dim 4, widths {1, 2} with 2 filters each and 3 classes, plus a one-layer
// MLP of the same vocabulary, both checked on a seeded batch of 6 queries of
// length 5 under a fixed dropout mask.
TinyGradCheck run_tiny_grad_check(double epsilon, std::uint64_t seed,
                                  Activation activation = Activation::kTanh);

}  // namespace querycat
