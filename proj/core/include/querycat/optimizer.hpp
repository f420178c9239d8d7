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
#include <string>
#include <vector>

#include "querycat/network.hpp"

namespace querycat {

enum class OptimizerKind { kAdam, kSgd };

const char* to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(const std::string& name);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::kAdam;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  void validate() const;
};

// Plain SGD or bias-corrected Adam. Parameters with trainable == false are
// never touched; a zero learning rate leaves every parameter bit-identical.
class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  // Throws ShapeMismatch if grads are not congruent with params.
  void step(std::vector<Parameter>& params, const Gradients& grads);

  std::size_t steps_taken() const { return step_; }
  const OptimizerConfig& config() const { return config_; }

 private:
  OptimizerConfig config_;
  std::size_t step_ = 0;
  std::vector<Matrix> first_moment_;
  std::vector<Matrix> second_moment_;
};

}  // namespace querycat
