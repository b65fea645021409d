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

#include "roadcal/errors.hpp"

namespace roadcal
{

std::string_view to_string(ErrorCode code)
{
  switch (code) {
    case ErrorCode::kBehindCamera:
      return "behind-camera";
    case ErrorCode::kNoIntersection:
      return "no-intersection";
    case ErrorCode::kInsufficientData:
      return "insufficient-data";
    case ErrorCode::kDegenerate:
      return "degenerate";
    case ErrorCode::kNoConsensus:
      return "no-consensus";
    case ErrorCode::kNoOverlap:
      return "no-overlap";
    case ErrorCode::kNoRefinablePairs:
      return "no-refinable-pairs";
    case ErrorCode::kInsufficientTraversals:
      return "insufficient-traversals";
    case ErrorCode::kInput:
      return "input";
    case ErrorCode::kParse:
      return "parse";
    case ErrorCode::kUnits:
      return "units";
    case ErrorCode::kConfig:
      return "config";
    case ErrorCode::kIo:
      return "io";
    case ErrorCode::kGeneration:
      return "generation";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string & message)
: std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code)
{
}

}  // namespace roadcal
