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

#include "embinvert/error.h"

namespace embinvert {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kEmptyText: return "EmptyText";
    case ErrorCode::kRefusedShortText: return "RefusedShortText";
    case ErrorCode::kRemoteUnavailable: return "RemoteUnavailable";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kAllRefused: return "AllRefused";
    case ErrorCode::kBadFractions: return "BadFractions";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kCorruptFile: return "CorruptFile";
    case ErrorCode::kVocabMismatch: return "VocabMismatch";
    case ErrorCode::kEmptyReference: return "EmptyReference";
    case ErrorCode::kTooFewTrials: return "TooFewTrials";
    case ErrorCode::kInsufficientGrams: return "InsufficientGrams";
    case ErrorCode::kZeroVariance: return "ZeroVariance";
    case ErrorCode::kEmptyReconstruction: return "EmptyReconstruction";
    case ErrorCode::kEmptyBucket: return "EmptyBucket";
  }
  return "Unknown";
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return 1;
    case ErrorCode::kRemoteUnavailable:
    case ErrorCode::kDimensionMismatch:
      return 3;
    default:
      return 2;
  }
}

}  // namespace embinvert
