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
#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sotifval/errors.hpp"
#include "sotifval/simkernel.hpp"

namespace sotifval {

/// Acceptance region for one simulated case. A run passes when its minimum
/// ttc stays at or above the threshold, its safe-distance violation time
/// stays at or below the budget, and no collision occurs.
struct TolerableWindow {
  double ttc_threshold = 1.5;   // s
  double msdv_threshold = 0.0;  // s

  bool operator==(const TolerableWindow&) const = default;
};

enum class Verdict { pass, hazardous };

inline const char* to_string(Verdict v) {
  return v == Verdict::pass ? "PASS" : "HAZARDOUS";
}

struct VerdictReport {
  Verdict verdict = Verdict::pass;
  std::vector<std::string> violated;  // spi names, worst first
};

inline VerdictReport evaluate(const SpiReport& spis, const TolerableWindow& window) {
  VerdictReport out;
  if (spis.collision) out.violated.push_back("collision");
  if (spis.min_ttc && *spis.min_ttc < window.ttc_threshold) {
    out.violated.push_back("min_ttc");
  }
  if (spis.msdv_duration > window.msdv_threshold) {
    out.violated.push_back("msdv_duration");
  }
  out.verdict = out.violated.empty() ? Verdict::pass : Verdict::hazardous;
  return out;
}

enum class TcStatus { confirmed, not_relevant, inconclusive };

inline const char* to_string(TcStatus s) {
  switch (s) {
    case TcStatus::confirmed: return "CONFIRMED_TRIGGERING_CONDITION";
    case TcStatus::not_relevant: return "NOT_RELEVANT";
    case TcStatus::inconclusive: return "INCONCLUSIVE";
  }
  return "UNKNOWN";
}

struct TcClassification {
  std::string tc_id;
  TcStatus status = TcStatus::not_relevant;
  double nominal_hazard_rate = 0;
  double tc_hazard_rate = 0;

  bool operator==(const TcClassification&) const = default;
};

inline double hazard_rate(const std::vector<RunResult>& results,
                          const TolerableWindow& window) {
  if (results.empty()) {
    fail(ErrorCode::empty_matrix, "empty matrix: no results to classify");
  }
  std::size_t hazardous = 0;
  for (const auto& r : results) {
    if (evaluate(r.report, window).verdict == Verdict::hazardous) ++hazardous;
  }
  return static_cast<double>(hazardous) / static_cast<double>(results.size());
}

/// Compares hazard rates between the nominal parameter space and the space
/// narrowed by a triggering condition. A condition is confirmed when it makes
/// hazardous outcomes strictly more frequent; when even the nominal space is
/// fully hazardous the comparison carries no signal.
inline TcClassification classify_tc(const std::vector<RunResult>& nominal,
                                    const std::vector<RunResult>& tc_results,
                                    const TolerableWindow& window,
                                    const std::string& tc_id) {
  TcClassification out;
  out.tc_id = tc_id;
  out.nominal_hazard_rate = hazard_rate(nominal, window);
  out.tc_hazard_rate = hazard_rate(tc_results, window);

  if (out.nominal_hazard_rate == 1.0 && out.tc_hazard_rate == 1.0) {
    out.status = TcStatus::inconclusive;
  } else if (out.tc_hazard_rate > out.nominal_hazard_rate) {
    out.status = TcStatus::confirmed;
  } else {
    out.status = TcStatus::not_relevant;
  }
  return out;
}

struct ThresholdResult {
  std::optional<double> value;  // absent when the boundary is not monotone
  double tol = 0;
  std::vector<std::string> diagnostics;
};

namespace detail {

/// Locates the verdict boundary of a predicate over [lo, hi] by bisection.
/// The predicate must flip exactly once; an 8-point sweep screens for
/// additional flips before bisection narrows the bracket to tol.
template <typename Pred>
ThresholdResult bisect_boundary(Pred&& hazardous, double lo, double hi, double tol) {
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) {
    fail(ErrorCode::not_bracketed,
         "search interval [" + std::to_string(lo) + ", " + std::to_string(hi) +
             "] is not a finite nonempty range");
  }
  if (tol <= 0 || !std::isfinite(tol)) {
    fail(ErrorCode::not_bracketed, "tolerance must be positive and finite");
  }

  ThresholdResult out;
  out.tol = tol;

  const bool at_lo = hazardous(lo);
  const bool at_hi = hazardous(hi);
  if (at_lo == at_hi) {
    fail(ErrorCode::not_bracketed,
         std::string("verdict is ") + (at_lo ? "HAZARDOUS" : "PASS") +
             " at both ends of the interval");
  }
  if (tol >= hi - lo) {
    out.value = lo + (hi - lo) / 2.0;
    return out;
  }

  constexpr int kSweepPoints = 8;
  int flips = 0;
  bool prev = at_lo;
  for (int i = 1; i < kSweepPoints; ++i) {
    const double x =
        lo + (hi - lo) * static_cast<double>(i) / (kSweepPoints - 1);
    const bool h = hazardous(x);
    if (h != prev) ++flips;
    prev = h;
  }
  if (flips > 1) {
    out.diagnostics.push_back("NonMonotone: verdict flips " +
                              std::to_string(flips) +
                              " times across the sweep; no single boundary");
    return out;
  }

  double a = lo;
  double b = hi;
  while (b - a > tol) {
    const double mid = a + (b - a) / 2.0;
    if (hazardous(mid) == at_lo) {
      a = mid;
    } else {
      b = mid;
    }
  }
  out.value = a + (b - a) / 2.0;
  return out;
}

}  // namespace detail

/// Finds the value of one parameter where the verdict flips, holding every
/// other parameter at the given fixed assignment. Each probe is one full
/// simulation.
inline ThresholdResult find_threshold(const EntityId& param, const Interval& interval,
                                      const std::map<EntityId, double>& fixed,
                                      const Scenario& s, const FunctionUnderTest& fut,
                                      const TolerableWindow& window, double tol,
                                      const SimConfig& cfg = {}) {
  auto hazardous = [&](double x) {
    TestCase tc;
    tc.case_index = 0;
    tc.scenario_id = s.id;
    tc.provenance = Provenance::nominal();
    tc.assignment = fixed;
    tc.assignment[param] = x;
    const auto [trace, report] = simulate(tc, s, fut, cfg);
    return evaluate(report, window).verdict == Verdict::hazardous;
  };
  return detail::bisect_boundary(hazardous, interval.lo, interval.hi, tol);
}

// Windows file parsing and report rendering.

inline nlohmann::json to_json(const TolerableWindow& w) {
  return {{"ttc_threshold", w.ttc_threshold}, {"msdv_threshold", w.msdv_threshold}};
}

inline TolerableWindow load_windows(const std::string& text) {
  const nlohmann::json j = detail::parse_json(text);
  detail::require_object(j, "windows");
  detail::reject_unknown_keys(j, {"ttc_threshold", "msdv_threshold"}, "windows");
  TolerableWindow w;
  if (detail::has_value(j, "ttc_threshold")) {
    w.ttc_threshold = detail::get_finite_double(j, "ttc_threshold", "windows");
  }
  if (detail::has_value(j, "msdv_threshold")) {
    w.msdv_threshold = detail::get_finite_double(j, "msdv_threshold", "windows");
  }
  if (w.ttc_threshold < 0 || w.msdv_threshold < 0) {
    fail(ErrorCode::syntax_error, "windows: thresholds must be non-negative");
  }
  return w;
}

struct ThresholdFinding {
  std::string param;
  double value = 0;
  double tol = 0;

  bool operator==(const ThresholdFinding&) const = default;
};

struct ClassificationReport {
  TcClassification classification;
  std::vector<ThresholdFinding> thresholds;
  TolerableWindow windows;
};

inline nlohmann::json to_json(const ClassificationReport& r) {
  nlohmann::json thresholds = nlohmann::json::array();
  for (const auto& t : r.thresholds) {
    thresholds.push_back({{"param", t.param}, {"value", t.value}, {"tol", t.tol}});
  }
  return {{"tc_id", r.classification.tc_id},
          {"status", to_string(r.classification.status)},
          {"nominal_hazard_rate", r.classification.nominal_hazard_rate},
          {"tc_hazard_rate", r.classification.tc_hazard_rate},
          {"thresholds", thresholds},
          {"windows", to_json(r.windows)}};
}

inline std::string render_markdown(const ClassificationReport& r) {
  std::ostringstream out;
  out.precision(6);
  out << "# Assessment: " << r.classification.tc_id << "\n\n";
  out << "Status: **" << to_string(r.classification.status) << "**\n\n";
  out << "| hazard rate | value |\n|---|---|\n";
  out << "| nominal | " << r.classification.nominal_hazard_rate << " |\n";
  out << "| with condition | " << r.classification.tc_hazard_rate << " |\n\n";
  out << "Tolerable window: min_ttc >= " << r.windows.ttc_threshold
      << " s, msdv_duration <= " << r.windows.msdv_threshold
      << " s, no collision.\n";
  if (!r.thresholds.empty()) {
    out << "\n## Verdict boundaries\n\n";
    out << "| param | boundary | tol |\n|---|---|---|\n";
    for (const auto& t : r.thresholds) {
      out << "| " << t.param << " | " << t.value << " | " << t.tol << " |\n";
    }
  }
  return out.str();
}

}  // namespace sotifval
