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

#include "querycat/error.hpp"

namespace querycat {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kIoFailure: return "io_failure";
    case ErrorCode::kInvalidSpec: return "invalid_spec";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kFormatVersionMismatch: return "format_version_mismatch";
    case ErrorCode::kIndexOutOfRange: return "index_out_of_range";
    case ErrorCode::kShapeMismatch: return "shape_mismatch";
    case ErrorCode::kStateMissing: return "state_missing";
    case ErrorCode::kVocabHashMismatch: return "vocab_hash_mismatch";
    case ErrorCode::kConfigMismatch: return "config_mismatch";
    case ErrorCode::kEmptyQuery: return "empty_query";
    case ErrorCode::kBindFailure: return "bind_failure";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

MalformedRecord::MalformedRecord(std::size_t line_no, const std::string& detail)
    : Error(ErrorCode::kMalformedRecord,
            "line " + std::to_string(line_no) + ": " + detail),
      line_no_(line_no) {}

}  // namespace querycat
