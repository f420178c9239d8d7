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
#include <stdexcept>
#include <string>

namespace querycat {

enum class ErrorCode {
  kMalformedRecord,
  kIoFailure,
  kInvalidSpec,
  kInvalidArgument,
  kFormatVersionMismatch,
  kIndexOutOfRange,
  kShapeMismatch,
  kStateMissing,
  kVocabHashMismatch,
  kConfigMismatch,
  kEmptyQuery,
  kBindFailure,
};

// Stable snake_case name, used in HTTP error bodies and CLI diagnostics.
const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class MalformedRecord : public Error {
 public:
  MalformedRecord(std::size_t line_no, const std::string& detail);

  // 1-based line number of the offending record.
  std::size_t line_no() const noexcept { return line_no_; }

 private:
  std::size_t line_no_;
};

}  // namespace querycat
