// Copyright 2026 The popdrop Authors.
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

#include <stdexcept>
#include <string>
#include <string_view>

namespace popdrop {

// Stable error codes. The numeric values are the CLI exit codes and must not
// be renumbered.
enum class ErrorCode : int {
  invalid_argument = 2,
  constant_input = 3,
  degenerate_pairs = 4,
  shape_mismatch = 5,
  fingerprint_mismatch = 6,
  parse_error = 7,
  duplicate_record = 8,
  incomplete_grid = 9,
  io_error = 10,
  training_diverged = 11,
  out_of_range = 12,
  unknown_token = 13,
  undefined_statistic = 14,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::invalid_argument: return "invalid_argument";
    case ErrorCode::constant_input: return "constant_input";
    case ErrorCode::degenerate_pairs: return "degenerate_pairs";
    case ErrorCode::shape_mismatch: return "shape_mismatch";
    case ErrorCode::fingerprint_mismatch: return "fingerprint_mismatch";
    case ErrorCode::parse_error: return "parse_error";
    case ErrorCode::duplicate_record: return "duplicate_record";
    case ErrorCode::incomplete_grid: return "incomplete_grid";
    case ErrorCode::io_error: return "io_error";
    case ErrorCode::training_diverged: return "training_diverged";
    case ErrorCode::out_of_range: return "out_of_range";
    case ErrorCode::unknown_token: return "unknown_token";
    case ErrorCode::undefined_statistic: return "undefined_statistic";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace popdrop
