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

#include <cmath>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>

#include "querycat/checkpoint.hpp"
#include "querycat/error.hpp"
#include "querycat/optimizer.hpp"
#include "test_support.hpp"

namespace querycat {
namespace {

std::vector<Parameter> scalar_param(double value, bool trainable = true) {
  return {Parameter{"x", Matrix::Constant(1, 1, value), trainable}};
}

TEST(Optimizer, SgdArithmetic) {
  auto params = scalar_param(1.0);
  Optimizer opt(OptimizerConfig{.kind = OptimizerKind::kSgd, .learning_rate = 0.1});
  opt.step(params, Gradients{Matrix::Constant(1, 1, 2.0)});
  EXPECT_DOUBLE_EQ(params[0].value(0, 0), 0.8);
  EXPECT_EQ(opt.steps_taken(), 1u);
}

TEST(Optimizer, ZeroLearningRateIsExactNoOp) {
  for (const OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    std::vector<Parameter> params{{"a", Matrix::Constant(2, 3, 0.1234567), true},
                                  {"b", Matrix::Constant(1, 4, -7.5), true}};
    const auto before = params;
    Optimizer opt(OptimizerConfig{.kind = kind, .learning_rate = 0.0});
    for (int i = 0; i < 10; ++i) {
      opt.step(params, Gradients{Matrix::Constant(2, 3, 3.0), Matrix::Constant(1, 4, -1e-3)});
    }
    EXPECT_EQ(params[0].value, before[0].value);
    EXPECT_EQ(params[1].value, before[1].value);
  }
}

TEST(Optimizer, AdamFirstStepIsLearningRate) {
  for (const double g : {1e-4, 0.5, 3.0, -250.0}) {
    auto params = scalar_param(1.0);
    Optimizer opt(OptimizerConfig{});
    opt.step(params, Gradients{Matrix::Constant(1, 1, g)});
    // m_hat = g and v_hat = g^2, so the step is lr * g / (|g| + eps).
    const double expected = 1e-3 * std::abs(g) / (std::abs(g) + 1e-8);
    EXPECT_NEAR(std::abs(params[0].value(0, 0) - 1.0), expected, 1e-15);
    EXPECT_NEAR(std::abs(params[0].value(0, 0) - 1.0), 1e-3, 1e-6);
    EXPECT_EQ(std::signbit(params[0].value(0, 0) - 1.0), g > 0);
  }
}

TEST(Optimizer, AdamMatchesClosedFormSequence) {
  auto params = scalar_param(0.0);
  Optimizer opt(OptimizerConfig{.learning_rate = 0.01});
  double m = 0, v = 0, x = 0;
  const double grads[] = {0.3, -0.1, 0.7, 0.2, -0.4};
  for (int t = 1; t <= 5; ++t) {
    const double g = grads[t - 1];
    opt.step(params, Gradients{Matrix::Constant(1, 1, g)});
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    x -= 0.01 * mh / (std::sqrt(vh) + 1e-8);
    EXPECT_NEAR(params[0].value(0, 0), x, 1e-15);
  }
}

TEST(Optimizer, FrozenParametersUntouched) {
  for (const OptimizerKind kind : {OptimizerKind::kSgd, OptimizerKind::kAdam}) {
    std::vector<Parameter> params{{"frozen", Matrix::Constant(2, 2, 0.5), false},
                                  {"live", Matrix::Constant(2, 2, 0.5), true}};
    Optimizer opt(OptimizerConfig{.kind = kind, .learning_rate = 0.1});
    opt.step(params, Gradients{Matrix::Ones(2, 2), Matrix::Ones(2, 2)});
    EXPECT_EQ(params[0].value, Matrix::Constant(2, 2, 0.5));
    EXPECT_NE(params[1].value, Matrix::Constant(2, 2, 0.5));
  }
}

TEST(Optimizer, ShapeMismatch) {
  auto params = scalar_param(1.0);
  Optimizer opt(OptimizerConfig{});
  try {
    opt.step(params, Gradients{Matrix::Zero(2, 1)});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EXPECT_THROW(opt.step(params, Gradients{}), Error);
}

TEST(Optimizer, ConfigValidation) {
  EXPECT_THROW(OptimizerConfig{.learning_rate = -1.0}.validate(), Error);
  EXPECT_THROW(OptimizerConfig{.beta1 = 1.0}.validate(), Error);
  EXPECT_EQ(optimizer_from_string("sgd"), OptimizerKind::kSgd);
  EXPECT_STREQ(to_string(OptimizerKind::kAdam), "adam");
  EXPECT_THROW(optimizer_from_string("rmsprop"), Error);
}

Checkpoint sample_checkpoint() {
  Checkpoint cp;
  cp.kind = "cnn";
  cp.hyperparameters = {{"embedding_dim", 4}};
  Matrix a(2, 3);
  a << 0.5, -1.25, 3.0, 0x1p-24, -0.0, 65504.0;
  cp.tensors.push_back({"a", a, true});
  cp.tensors.push_back({"b", Matrix::Constant(1, 2, 0.1f), false});
  cp.vocab_hash = "0123456789abcdef";
  cp.class_ids = {1, 27, 800};
  return cp;
}

TEST(Checkpoint, RoundTrip) {
  std::stringstream buf;
  const Checkpoint cp = sample_checkpoint();
  write_checkpoint(buf, cp);
  const std::string bytes = buf.str();
  EXPECT_EQ(bytes.substr(0, 4), "QCAT");
  EXPECT_EQ(static_cast<unsigned char>(bytes[4]), 1u);
  EXPECT_EQ(bytes[5] | bytes[6] | bytes[7], 0);
  const Checkpoint back = read_checkpoint(buf);
  EXPECT_EQ(back.kind, "cnn");
  EXPECT_EQ(back.hyperparameters, cp.hyperparameters);
  EXPECT_EQ(back.vocab_hash, cp.vocab_hash);
  EXPECT_EQ(back.class_ids, cp.class_ids);
  ASSERT_EQ(back.tensors.size(), 2u);
  EXPECT_EQ(back.tensors[0].name, "a");
  EXPECT_EQ(back.tensors[0].value, cp.tensors[0].value);
  EXPECT_FALSE(back.tensors[1].trainable);
  EXPECT_EQ(back.tensors[1].value, cp.tensors[1].value);

  std::stringstream again;
  write_checkpoint(again, back);
  EXPECT_EQ(again.str(), bytes);
}

TEST(Checkpoint, FloatStorageRounds) {
  Checkpoint cp = sample_checkpoint();
  cp.tensors[0].value(0, 0) = 0.1;
  std::stringstream buf;
  write_checkpoint(buf, cp);
  EXPECT_EQ(read_checkpoint(buf).tensors[0].value(0, 0), static_cast<double>(0.1f));
}

TEST(Checkpoint, CorruptionIsDetected) {
  std::stringstream buf;
  write_checkpoint(buf, sample_checkpoint());
  const std::string bytes = buf.str();
  const auto expect_code = [](const std::string& data, ErrorCode code) {
    std::istringstream in(data);
    try {
      read_checkpoint(in);
      ADD_FAILURE() << "accepted corrupt checkpoint";
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), code) << to_string(e.code());
    }
  };
  std::string magic = bytes;
  magic[0] = 'X';
  expect_code(magic, ErrorCode::kFormatVersionMismatch);
  std::string version = bytes;
  version[4] = 2;
  expect_code(version, ErrorCode::kFormatVersionMismatch);
  std::string header = bytes;
  header[12] = '!';
  expect_code(header, ErrorCode::kFormatVersionMismatch);
  expect_code(bytes.substr(0, bytes.size() - 3), ErrorCode::kIoFailure);
  expect_code(bytes + "x", ErrorCode::kFormatVersionMismatch);
  expect_code("", ErrorCode::kFormatVersionMismatch);
}

TEST(Checkpoint, FileVersionIsContentHash) {
  testing::TempDir dir;
  Checkpoint cp = sample_checkpoint();
  save_checkpoint(cp, dir.file("a.qcat"));
  save_checkpoint(cp, dir.file("b.qcat"));
  EXPECT_EQ(checkpoint_version(dir.file("a.qcat")), checkpoint_version(dir.file("b.qcat")));
  EXPECT_EQ(checkpoint_version(dir.file("a.qcat")).size(), 16u);
  cp.tensors[0].value(0, 0) = 2.0;
  save_checkpoint(cp, dir.file("b.qcat"));
  EXPECT_NE(checkpoint_version(dir.file("a.qcat")), checkpoint_version(dir.file("b.qcat")));
  EXPECT_THROW(load_checkpoint(dir.file("missing.qcat")), Error);
}

}  // namespace
}  // namespace querycat
