//
// Copyright 2026 The dpkalman Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace dpkalman {

// Every failure raised by the library carries one of these kinds. The CLI maps
// them onto process exit codes (see ExitCodeFor).
enum class ErrorKind {
  kInvalidArgument,
  kDimensionMismatch,
  kNonSymmetric,
  kNotPositiveDefinite,
  kFactorizationFailure,
  kNotDetectable,
  kNotStabilizable,
  kNoConvergence,
  kSingularV,
  kSingularSigma,
  kOutOfDomain,
  kNotDiagonal,
  kNonPositiveSigma,
  kInvalidTarget,
  kDegenerateH,
  kEmptyNetwork,
  kConfig,
  kIo,
};

constexpr std::string_view ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kDimensionMismatch: return "DimensionMismatch";
    case ErrorKind::kNonSymmetric: return "NonSymmetric";
    case ErrorKind::kNotPositiveDefinite: return "NotPD";
    case ErrorKind::kFactorizationFailure: return "FactorizationFailure";
    case ErrorKind::kNotDetectable: return "NotDetectable";
    case ErrorKind::kNotStabilizable: return "NotStabilizable";
    case ErrorKind::kNoConvergence: return "NoConvergence";
    case ErrorKind::kSingularV: return "SingularV";
    case ErrorKind::kSingularSigma: return "SingularSigma";
    case ErrorKind::kOutOfDomain: return "OutOfDomain";
    case ErrorKind::kNotDiagonal: return "NotDiagonal";
    case ErrorKind::kNonPositiveSigma: return "NonPositiveSigma";
    case ErrorKind::kInvalidTarget: return "InvalidTarget";
    case ErrorKind::kDegenerateH: return "DegenerateH";
    case ErrorKind::kEmptyNetwork: return "EmptyNetwork";
    case ErrorKind::kConfig: return "ConfigError";
    case ErrorKind::kIo: return "IoError";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(ErrorKindName(kind)) + ": " + message),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Process exit status taxonomy used by the command line tool.
enum class ExitStatus : int {
  kSuccess = 0,
  kValidation = 1,
  kInfeasible = 2,
  kNumerical = 3,
};

constexpr ExitStatus ExitCodeFor(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kNoConvergence:
    case ErrorKind::kSingularV:
    case ErrorKind::kSingularSigma:
      return ExitStatus::kNumerical;
    default:
      return ExitStatus::kValidation;
  }
}

}  // namespace dpkalman
