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

#include <cmath>
#include <initializer_list>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sotifval/errors.hpp"
#include "sotifval/interval.hpp"

namespace sotifval::detail {

// Strict parsing helpers for the document formats. Documents reject unknown
// keys and non-finite numbers.

inline nlohmann::json parse_json(const std::string& text) {
  try {
    return nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    // parse_error for malformed text, out_of_range for numeric overflow
    fail(ErrorCode::syntax_error, e.what());
  }
}

inline void require_object(const nlohmann::json& j, const std::string& context) {
  if (!j.is_object()) {
    fail(ErrorCode::syntax_error, context + ": expected a JSON object");
  }
}

inline void reject_unknown_keys(const nlohmann::json& j,
                                std::initializer_list<std::string_view> allowed,
                                const std::string& context) {
  require_object(j, context);
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    for (const auto& a : allowed) {
      if (key == a) {
        known = true;
        break;
      }
    }
    if (!known) {
      fail(ErrorCode::syntax_error, context + ": unknown key \"" + key + "\"");
    }
  }
}

inline bool has_value(const nlohmann::json& j, const std::string& key) {
  const auto it = j.find(key);
  return it != j.end() && !it->is_null();
}

inline double as_finite_double(const nlohmann::json& j, const std::string& context) {
  if (!j.is_number()) {
    fail(ErrorCode::syntax_error, context + ": expected a number");
  }
  const double v = j.get<double>();
  if (!std::isfinite(v)) {
    fail(ErrorCode::syntax_error, context + ": number must be finite");
  }
  return v;
}

inline double get_finite_double(const nlohmann::json& j, const std::string& key,
                                const std::string& context) {
  if (!has_value(j, key)) {
    fail(ErrorCode::syntax_error, context + ": missing \"" + key + "\"");
  }
  return as_finite_double(j.at(key), context + "." + key);
}

inline std::string get_string(const nlohmann::json& j, const std::string& key,
                              const std::string& context) {
  if (!has_value(j, key) || !j.at(key).is_string()) {
    fail(ErrorCode::syntax_error, context + ": missing string \"" + key + "\"");
  }
  return j.at(key).get<std::string>();
}

inline Interval as_interval(const nlohmann::json& j, const std::string& context) {
  if (!j.is_array() || j.size() != 2) {
    fail(ErrorCode::syntax_error, context + ": expected [lo, hi]");
  }
  return {as_finite_double(j.at(0), context + "[0]"),
          as_finite_double(j.at(1), context + "[1]")};
}

inline nlohmann::json interval_to_json(const Interval& iv) {
  // Infinite endpoints serialize as null so documents stay valid JSON.
  nlohmann::json lo = std::isfinite(iv.lo) ? nlohmann::json(iv.lo) : nlohmann::json();
  nlohmann::json hi = std::isfinite(iv.hi) ? nlohmann::json(iv.hi) : nlohmann::json();
  return nlohmann::json::array({lo, hi});
}

}  // namespace sotifval::detail
