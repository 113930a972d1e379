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
#include <limits>
#include <optional>

namespace sotifval {

/// Closed interval [lo, hi]. Endpoints may be +-infinity for unbounded sides.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  static Interval unbounded() {
    return {-std::numeric_limits<double>::infinity(),
            std::numeric_limits<double>::infinity()};
  }
  static Interval point(double v) { return {v, v}; }

  bool valid() const { return lo <= hi; }
  bool degenerate() const { return lo == hi; }
  double width() const { return hi - lo; }
  double midpoint() const { return lo + (hi - lo) / 2.0; }
  bool contains(double v) const { return v >= lo && v <= hi; }
  double clamp(double v) const { return std::min(hi, std::max(lo, v)); }

  std::optional<Interval> intersect(const Interval& other) const {
    const Interval r{std::max(lo, other.lo), std::min(hi, other.hi)};
    if (!r.valid()) return std::nullopt;
    return r;
  }

  bool operator==(const Interval&) const = default;
  auto operator<=>(const Interval&) const = default;
};

}  // namespace sotifval
