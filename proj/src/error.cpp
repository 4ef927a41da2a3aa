// Copyright 2026 The ceis Authors
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

#include "ceis/error.hpp"

namespace ceis {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "invalid argument";
    case ErrorKind::kIntegrationDiverged: return "integration diverged";
    case ErrorKind::kWeightOverflow: return "weight overflow";
    case ErrorKind::kDegenerateWeights: return "degenerate weights";
    case ErrorKind::kAssembly: return "assembly error";
    case ErrorKind::kSingularSystem: return "singular system";
    case ErrorKind::kPositivityViolation: return "positivity violation";
    case ErrorKind::kConfiguration: return "configuration error";
    case ErrorKind::kExtrapolation: return "extrapolation error";
    case ErrorKind::kParse: return "parse error";
    case ErrorKind::kUsage: return "usage error";
  }
  return "unknown error";
}

}  // namespace ceis
