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

#include "querycat/optimizer.hpp"

#include <cmath>

#include "querycat/error.hpp"

namespace querycat {

const char* to_string(OptimizerKind kind) { return kind == OptimizerKind::kAdam ? "adam" : "sgd"; }

OptimizerKind optimizer_from_string(const std::string& name) {
  if (name == "adam") return OptimizerKind::kAdam;
  if (name == "sgd") return OptimizerKind::kSgd;
  throw Error(ErrorCode::kInvalidArgument, "unknown optimizer '" + name + "'");
}

void OptimizerConfig::validate() const {
  if (!(learning_rate >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "learning rate must be >= 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "Adam betas must be in [0, 1)");
  }
  if (!(epsilon > 0.0)) throw Error(ErrorCode::kInvalidArgument, "Adam epsilon must be > 0");
}

Optimizer::Optimizer(OptimizerConfig config) : config_(config) { config_.validate(); }

void Optimizer::step(std::vector<Parameter>& params, const Gradients& grads) {
  if (grads.size() != params.size()) {
    throw Error(ErrorCode::kShapeMismatch, "gradient count does not match parameter count");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (grads[i].rows() != params[i].value.rows() || grads[i].cols() != params[i].value.cols()) {
      throw Error(ErrorCode::kShapeMismatch, "gradient shape for '" + params[i].name + "'");
    }
  }
  ++step_;
  const double lr = config_.learning_rate;

  if (config_.kind == OptimizerKind::kSgd) {
    if (lr == 0.0) return;
    for (std::size_t i = 0; i < params.size(); ++i) {
      if (params[i].trainable) params[i].value.noalias() -= lr * grads[i];
    }
    return;
  }

  if (first_moment_.empty()) {
    for (const Parameter& p : params) {
      first_moment_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
      second_moment_.push_back(Matrix::Zero(p.value.rows(), p.value.cols()));
    }
  }
  const double b1 = config_.beta1;
  const double b2 = config_.beta2;
  const double t = static_cast<double>(step_);
  const double c1 = 1.0 - std::pow(b1, t);
  const double c2 = 1.0 - std::pow(b2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!params[i].trainable) continue;
    auto m = first_moment_[i].array();
    auto v = second_moment_[i].array();
    const auto g = grads[i].array();
    m = b1 * m + (1.0 - b1) * g;
    v = b2 * v + (1.0 - b2) * g.square();
    if (lr == 0.0) continue;
    params[i].value.array() -= lr * (m / c1) / ((v / c2).sqrt() + config_.epsilon);
  }
}

}  // namespace querycat
