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

#include <algorithm>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

namespace sotifval {

enum class Severity { warning, error };

inline const char* to_string(Severity s) {
  return s == Severity::error ? "error" : "warning";
}

struct ValidationIssue {
  Severity severity = Severity::error;
  std::string entity;   // id/path of the offending element
  std::string message;

  bool operator==(const ValidationIssue&) const = default;
};

/// Ordered list of validation findings. Problems are entries, not failures;
/// entries are kept sorted by (entity, severity, message) so reports are
/// deterministic for identical inputs.
class ValidationReport {
 public:
  void add(Severity severity, std::string entity, std::string message) {
    issues_.push_back({severity, std::move(entity), std::move(message)});
    sorted_ = false;
  }
  void add_error(std::string entity, std::string message) {
    add(Severity::error, std::move(entity), std::move(message));
  }
  void add_warning(std::string entity, std::string message) {
    add(Severity::warning, std::move(entity), std::move(message));
  }
  void merge(const ValidationReport& other) {
    for (const auto& issue : other.issues_) issues_.push_back(issue);
    sorted_ = false;
  }

  bool empty() const { return issues_.empty(); }
  /// True when the report carries no errors (warnings allowed).
  bool ok() const {
    return std::none_of(issues_.begin(), issues_.end(), [](const auto& i) {
      return i.severity == Severity::error;
    });
  }
  std::size_t error_count() const {
    return static_cast<std::size_t>(
        std::count_if(issues_.begin(), issues_.end(), [](const auto& i) {
          return i.severity == Severity::error;
        }));
  }

  const std::vector<ValidationIssue>& issues() const {
    sort();
    return issues_;
  }

  std::string to_text() const {
    if (issues_.empty()) return "OK\n";
    std::string out;
    for (const auto& issue : issues()) {
      out += to_string(issue.severity);
      out += ": ";
      if (!issue.entity.empty()) {
        out += issue.entity;
        out += ": ";
      }
      out += issue.message;
      out += '\n';
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& issue : issues()) {
      arr.push_back({{"severity", to_string(issue.severity)},
                     {"entity", issue.entity},
                     {"message", issue.message}});
    }
    return {{"issues", arr}, {"ok", ok()}};
  }

 private:
  void sort() const {
    if (sorted_) return;
    std::stable_sort(issues_.begin(), issues_.end(),
                     [](const ValidationIssue& a, const ValidationIssue& b) {
                       return std::tie(a.entity, a.severity, a.message) <
                              std::tie(b.entity, b.severity, b.message);
                     });
    sorted_ = true;
  }

  mutable std::vector<ValidationIssue> issues_;
  mutable bool sorted_ = true;
};

}  // namespace sotifval
