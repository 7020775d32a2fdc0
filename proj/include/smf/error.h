// Copyright 2026 The SMF Rewrite Authors. All Rights Reserved.
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

#ifndef SMF_ERROR_H_
#define SMF_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace smf {

enum class ErrorCode {
  // treebank
  kUnbalancedParens,
  kEmptyNode,
  kTagWithoutContent,
  kOffsetOutOfRange,
  // similarity
  kEmptyInput,
  kZeroVector,
  kDimensionMismatch,
  kMissingEntry,
  // flags
  kIndexOutOfRange,
  // model
  kTokenOutOfVocab,
  kShapeMismatch,
  kLengthOverflow,
  kNonFiniteLoss,
  kCheckpointVersionMismatch,
  // datagen / eval / cli
  kInvalidMix,
  kIdMismatch,
  kMissingParse,
  kIoError,
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Validation errors are caused by bad input; everything else is a runtime
// failure. The CLI maps the two groups to distinct exit codes.
bool is_validation_error(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace smf

#endif  // SMF_ERROR_H_
