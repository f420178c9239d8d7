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

// Checkpoint container:
//   "QCAT" | u32 LE format version | u32 LE header length | JSON header |
//   float32 LE tensor payloads, row-major, in manifest order.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "querycat/ingest.hpp"
#include "querycat/layers.hpp"

namespace querycat {

inline constexpr char kCheckpointMagic[4] = {'Q', 'C', 'A', 'T'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  Matrix value;
  bool trainable = true;
};

struct Checkpoint {
  std::string kind;  // "cnn" or "mlp"
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<NamedTensor> tensors;
  std::string vocab_hash;
  std::vector<CategoryId> class_ids;
};

void write_checkpoint(std::ostream& out, const Checkpoint& checkpoint);
// Throws FormatVersionMismatch on a bad magic, version or header, and
// IoFailure on a truncated payload.
Checkpoint read_checkpoint(std::istream& in);

void save_checkpoint(const Checkpoint& checkpoint, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Content hash of a checkpoint file; the served model version.
std::string checkpoint_version(const std::string& path);

}  // namespace querycat
