// Copyright 2026 The embinvert Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef EMBINVERT_ERROR_H_
#define EMBINVERT_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace embinvert {

// Every failure raised by the library carries one of these codes. The CLI
// maps them onto process exit codes (see exit_code_for).
enum class ErrorCode {
  kInvalidArgument,
  kIoFailure,
  kEmptyText,
  kRefusedShortText,
  kRemoteUnavailable,
  kDimensionMismatch,
  kAllRefused,
  kBadFractions,
  kShapeMismatch,
  kDivergenceDetected,
  kCorruptFile,
  kVocabMismatch,
  kEmptyReference,
  kTooFewTrials,
  kInsufficientGrams,
  kZeroVariance,
  kEmptyReconstruction,
  kEmptyBucket,
};

std::string_view error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// 0 ok, 1 usage, 2 data error, 3 remote error.
int exit_code_for(ErrorCode code);

}  // namespace embinvert

#endif  // EMBINVERT_ERROR_H_
