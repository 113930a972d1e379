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

#include <compare>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sotifval/errors.hpp"

namespace sotifval {

/// Hierarchical entity identifier: slash-separated path of non-empty
/// `[a-z0-9_]+` segments, e.g. "environment/weather/snowfall".
class EntityId {
 public:
  EntityId() = default;

  static bool valid_segment(std::string_view seg) {
    if (seg.empty()) return false;
    for (char c : seg) {
      const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
      if (!ok) return false;
    }
    return true;
  }

  static std::optional<EntityId> try_parse(std::string_view text) {
    if (text.empty()) return std::nullopt;
    EntityId id;
    std::size_t start = 0;
    while (true) {
      const std::size_t slash = text.find('/', start);
      const std::string_view seg = slash == std::string_view::npos
                                       ? text.substr(start)
                                       : text.substr(start, slash - start);
      if (!valid_segment(seg)) return std::nullopt;
      id.segments_.emplace_back(seg);
      if (slash == std::string_view::npos) break;
      start = slash + 1;
    }
    return id;
  }

  static EntityId parse(std::string_view text) {
    auto id = try_parse(text);
    if (!id) {
      fail(ErrorCode::syntax_error,
           "invalid entity id \"" + std::string(text) +
               "\" (segments must match [a-z0-9_]+, joined by '/')",
           std::string(text));
    }
    return *std::move(id);
  }

  const std::vector<std::string>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  std::size_t depth() const { return segments_.size(); }
  const std::string& leaf() const { return segments_.back(); }

  /// Path with the last segment removed; empty id for single-segment paths.
  EntityId parent_path() const {
    EntityId id;
    if (segments_.size() > 1) {
      id.segments_.assign(segments_.begin(), segments_.end() - 1);
    }
    return id;
  }

  std::string str() const {
    std::string out;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
      if (i > 0) out += '/';
      out += segments_[i];
    }
    return out;
  }

  auto operator<=>(const EntityId&) const = default;

 private:
  std::vector<std::string> segments_;
};

}  // namespace sotifval
