// Copyright 2026 the sotifval authors
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
#include <utility>

namespace sotifval {

enum class ErrorCode {
  syntax_error,
  duplicate_id,
  dangling_parent,
  not_found,
  wrong_kind,
  unknown_sub_condition,
  cyclic_composition,
  unresolved_param,
  infeasible_constraints,
  empty_sampling_range,
  invalid_levels,
  degenerate_friction,
  not_simulatable,
  non_finite_state,
  empty_matrix,
  not_bracketed,
  validation_failed,
  digest_mismatch,
  io_error,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::syntax_error: return "SyntaxError";
    case ErrorCode::duplicate_id: return "DuplicateId";
    case ErrorCode::dangling_parent: return "DanglingParent";
    case ErrorCode::not_found: return "NotFound";
    case ErrorCode::wrong_kind: return "WrongKind";
    case ErrorCode::unknown_sub_condition: return "UnknownSubCondition";
    case ErrorCode::cyclic_composition: return "CyclicComposition";
    case ErrorCode::unresolved_param: return "UnresolvedParam";
    case ErrorCode::infeasible_constraints: return "InfeasibleConstraints";
    case ErrorCode::empty_sampling_range: return "EmptySamplingRange";
    case ErrorCode::invalid_levels: return "InvalidLevels";
    case ErrorCode::degenerate_friction: return "DegenerateFriction";
    case ErrorCode::not_simulatable: return "NotSimulatable";
    case ErrorCode::non_finite_state: return "NonFiniteState";
    case ErrorCode::empty_matrix: return "EmptyMatrix";
    case ErrorCode::not_bracketed: return "NotBracketed";
    case ErrorCode::validation_failed: return "ValidationFailed";
    case ErrorCode::digest_mismatch: return "DigestMismatch";
    case ErrorCode::io_error: return "IoError";
  }
  return "UnknownError";
}

/// Library error. `entity()` names the offending entity/id when one exists,
/// so callers can turn hard errors into report entries.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string message, std::string entity = {})
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        entity_(std::move(entity)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& entity() const noexcept { return entity_; }

 private:
  ErrorCode code_;
  std::string entity_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message,
                              const std::string& entity = {}) {
  throw Error(code, message, entity);
}

}  // namespace sotifval
