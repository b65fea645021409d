// Copyright 2026 The roadcal Authors
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

#ifndef ROADCAL__ERRORS_HPP_
#define ROADCAL__ERRORS_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace roadcal
{

enum class ErrorCode {
  kBehindCamera,
  kNoIntersection,
  kInsufficientData,
  kDegenerate,
  kNoConsensus,
  kNoOverlap,
  kNoRefinablePairs,
  kInsufficientTraversals,
  kInput,
  kParse,
  kUnits,
  kConfig,
  kIo,
  kGeneration,
};

std::string_view to_string(ErrorCode code);

// Every failure raised by the library carries a machine-readable code so
// callers (notably the CLI) can map it to an exit status.
class Error : public std::runtime_error
{
public:
  Error(ErrorCode code, const std::string & message);

  ErrorCode code() const noexcept { return code_; }

private:
  ErrorCode code_;
};

}  // namespace roadcal

#endif  // ROADCAL__ERRORS_HPP_
