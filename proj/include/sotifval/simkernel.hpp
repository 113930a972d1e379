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
#include <atomic>
#include <cmath>
#include <cstddef>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "sotifval/errors.hpp"
#include "sotifval/scenario.hpp"
#include "sotifval/testgen.hpp"

namespace sotifval {

struct SimConfig {
  double dt = 0.01;       // s
  double horizon = 30.0;  // s
  double g = 9.81;        // m/s^2

  bool valid() const { return dt > 0 && horizon >= dt; }
};

/// One recorded integration step with the derived quantities the SPIs need.
struct TraceRow {
  double t = 0;
  double ego_pos = 0;
  double ego_vel = 0;
  double lead_pos = 0;
  double lead_vel = 0;
  double gap = 0;
  std::optional<double> ttc;
  double safe_distance = 0;
  bool detected = false;
  bool brake_active = false;
};

using SimTrace = std::vector<TraceRow>;

/// Safety performance indicators aggregated over one simulation run.
struct SpiReport {
  std::optional<double> min_ttc;  // absent when the gap never closes
  double min_gap = 0;             // raw, negative on collision penetration
  double msdv_duration = 0;       // time spent below the safe distance
  bool collision = false;

  bool operator==(const SpiReport&) const = default;
};

/// Perception range after visibility and illuminance degradation. The sensor
/// cap and the visibility limit take the minimum; low light scales the result
/// down to a configured floor.
inline double detection_range(const FunctionUnderTest& fut, double visibility,
                              double illuminance) {
  const double base = std::min(fut.sensor_max_range, visibility);
  double illum_factor = 1.0;
  if (illuminance < fut.illum_full) {
    illum_factor = fut.illum_floor_factor +
                   (1.0 - fut.illum_floor_factor) * (illuminance / fut.illum_full);
  }
  return base * illum_factor;
}

/// Time to collision at the current closing speed; absent when not closing.
inline std::optional<double> compute_ttc(double gap, double closing_speed) {
  if (closing_speed > 0) return gap / closing_speed;
  return std::nullopt;
}

/// Longitudinal safe following distance: the ego covers its reaction distance
/// plus the braking-distance surplus over the lead, at friction-scaled
/// deceleration. Never negative.
inline double compute_safe_distance(double v_ego, double v_lead,
                                    const FunctionUnderTest& fut, double mu_eff) {
  if (mu_eff <= 0) {
    fail(ErrorCode::degenerate_friction,
         "effective friction must be positive, got " + std::to_string(mu_eff));
  }
  const double a_eff = fut.max_decel_at_mu1 * mu_eff;
  const double d = v_ego * fut.reaction_time + v_ego * v_ego / (2.0 * a_eff) -
                   v_lead * v_lead / (2.0 * a_eff);
  return std::max(0.0, d);
}

namespace detail {

inline double assignment_value(const std::map<EntityId, double>& assignment,
                               const std::string& leaf, double fallback) {
  for (const auto& [id, value] : assignment) {
    if (id.leaf() == leaf) return value;
  }
  return fallback;
}

struct LeadProfile {
  std::string kind = "stopped";
  double speed = 0;
  double decel_start = 0;
  double decel = 0;
};

inline const SceneElement& require_element(const Scenario& s, const std::string& kind) {
  const SceneElement* e = s.find_element(4, kind);
  if (e == nullptr) {
    fail(ErrorCode::not_simulatable,
         "scenario \"" + s.id + "\" has no " + kind + " in layer 4", s.id);
  }
  return *e;
}

inline double require_attr(const SceneElement& e, const std::string& key,
                           const std::string& scenario_id) {
  const double* v = e.num_attr(key);
  if (v == nullptr) {
    fail(ErrorCode::not_simulatable,
         e.kind + " is missing numeric attr \"" + key + "\"", scenario_id);
  }
  return *v;
}

inline LeadProfile lead_profile(const SceneElement& lead, const std::string& sid) {
  LeadProfile p;
  if (const std::string* kind = lead.str_attr("profile")) p.kind = *kind;
  if (p.kind == "stopped") {
    return p;
  }
  if (p.kind == "constant_speed") {
    p.speed = require_attr(lead, "speed", sid);
    return p;
  }
  if (p.kind == "scripted_decel") {
    p.speed = require_attr(lead, "speed", sid);
    p.decel_start = require_attr(lead, "decel_start", sid);
    p.decel = require_attr(lead, "decel", sid);
    return p;
  }
  fail(ErrorCode::not_simulatable, "unknown lead profile \"" + p.kind + "\"", sid);
}

}  // namespace detail

/// Fixed-step explicit Euler simulation of the ego approaching a scripted
/// lead vehicle. The ego cruises at its set speed, latches detection when the
/// gap first drops to the perception range, and brakes at friction-scaled
/// deceleration once the reaction time has elapsed. On collision the state
/// freezes and only the recording continues. Bit-identical for identical
/// inputs.
inline std::pair<SimTrace, SpiReport> simulate(const TestCase& tc, const Scenario& s,
                                               const FunctionUnderTest& fut,
                                               const SimConfig& cfg = {}) {
  if (!cfg.valid()) {
    fail(ErrorCode::not_simulatable, "config requires dt > 0 and horizon >= dt");
  }
  const SceneElement& ego = detail::require_element(s, "ego_vehicle");
  const SceneElement& lead = detail::require_element(s, "lead_vehicle");
  const double ego_speed = detail::require_attr(ego, "speed", s.id);
  const double initial_gap = detail::require_attr(lead, "initial_gap", s.id);
  if (initial_gap <= 0) {
    fail(ErrorCode::not_simulatable, "initial_gap must be positive", s.id);
  }
  const detail::LeadProfile profile = detail::lead_profile(lead, s.id);

  const double visibility = detail::assignment_value(
      tc.assignment, "visibility", std::numeric_limits<double>::infinity());
  const double illuminance =
      detail::assignment_value(tc.assignment, "illuminance", fut.illum_full);
  const double mu_eff = detail::assignment_value(tc.assignment, "asphalt_friction", 1.0);
  if (mu_eff <= 0) {
    fail(ErrorCode::degenerate_friction,
         "effective friction must be positive, got " + std::to_string(mu_eff));
  }

  const double det_range = detection_range(fut, visibility, illuminance);
  const double a_eff = fut.max_decel_at_mu1 * mu_eff;

  double ego_pos = 0;
  double ego_vel = ego_speed;
  double lead_pos = initial_gap;
  double lead_vel = profile.kind == "stopped" ? 0.0 : profile.speed;
  bool detected = false;
  double detection_time = 0;
  bool brake_active = false;

  SimTrace trace;
  SpiReport report;
  report.min_gap = initial_gap;
  bool collision = false;

  const std::size_t steps = static_cast<std::size_t>(std::llround(cfg.horizon / cfg.dt));
  trace.reserve(steps + 1);

  for (std::size_t step = 0; step <= steps; ++step) {
    const double t = static_cast<double>(step) * cfg.dt;
    const double gap = lead_pos - ego_pos;

    if (!std::isfinite(ego_pos) || !std::isfinite(ego_vel) || !std::isfinite(lead_pos) ||
        !std::isfinite(lead_vel)) {
      fail(ErrorCode::non_finite_state,
           "simulation state diverged at t=" + std::to_string(t), s.id);
    }

    if (!collision && !detected && gap <= det_range) {
      detected = true;
      detection_time = t;
    }
    if (detected && !collision && t >= detection_time + fut.reaction_time) {
      brake_active = true;
    }

    TraceRow row;
    row.t = t;
    row.ego_pos = ego_pos;
    row.ego_vel = ego_vel;
    row.lead_pos = lead_pos;
    row.lead_vel = lead_vel;
    row.gap = gap;
    row.ttc = collision ? std::optional<double>{}
                        : compute_ttc(std::max(0.0, gap), ego_vel - lead_vel);
    row.safe_distance = compute_safe_distance(ego_vel, lead_vel, fut, mu_eff);
    row.detected = detected;
    row.brake_active = brake_active;
    trace.push_back(row);

    report.min_gap = std::min(report.min_gap, gap);
    if (row.ttc) {
      report.min_ttc = report.min_ttc ? std::min(*report.min_ttc, *row.ttc) : *row.ttc;
    }

    if (step == steps) break;

    if (!collision && gap < row.safe_distance) {
      report.msdv_duration += cfg.dt;
    }
    if (collision) continue;

    // Explicit Euler: positions advance on current velocities, then
    // velocities take this step's acceleration.
    ego_pos += ego_vel * cfg.dt;
    lead_pos += lead_vel * cfg.dt;
    if (brake_active) {
      ego_vel = std::max(0.0, ego_vel - a_eff * cfg.dt);
    }
    if (profile.kind == "scripted_decel" && t >= profile.decel_start) {
      lead_vel = std::max(0.0, lead_vel - profile.decel * cfg.dt);
    }

    if (lead_pos - ego_pos <= 0) {
      collision = true;
      report.collision = true;
      report.min_ttc = 0.0;
      report.min_gap = std::min(report.min_gap, lead_pos - ego_pos);
      ego_vel = 0;
      lead_vel = 0;
    }
  }

  return {std::move(trace), report};
}

/// Trace export for debugging and plotting.
inline std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream out;
  out << "t,ego_pos,ego_vel,lead_pos,lead_vel,gap,ttc,safe_distance,detected,"
         "brake_active\n";
  out.precision(10);
  for (const auto& row : trace) {
    out << row.t << ',' << row.ego_pos << ',' << row.ego_vel << ',' << row.lead_pos
        << ',' << row.lead_vel << ',' << row.gap << ',';
    if (row.ttc) out << *row.ttc;
    out << ',' << row.safe_distance << ',' << (row.detected ? 1 : 0) << ','
        << (row.brake_active ? 1 : 0) << '\n';
  }
  return out.str();
}

/// One matrix case's SPI outcome, keyed for order-independent collection.
struct RunResult {
  std::size_t case_index = 0;
  std::string scenario_id;
  Provenance provenance;
  SpiReport report;

  bool operator==(const RunResult&) const = default;
};

/// Runs every matrix case against the scenario, optionally across worker
/// threads. Results come back sorted by case_index regardless of completion
/// order.
inline std::vector<RunResult> run_matrix(const TestMatrix& matrix, const Scenario& s,
                                         const FunctionUnderTest& fut,
                                         const SimConfig& cfg = {},
                                         unsigned workers = 0) {
  if (matrix.cases.empty()) {
    fail(ErrorCode::empty_matrix, "empty matrix: nothing to run");
  }
  if (workers == 0) {
    workers = std::max(1u, std::thread::hardware_concurrency());
  }
  workers = std::min<unsigned>(workers, static_cast<unsigned>(matrix.cases.size()));

  std::vector<RunResult> results(matrix.cases.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;

  auto work = [&]() {
    while (true) {
      const std::size_t i = next.fetch_add(1);
      if (i >= matrix.cases.size()) return;
      try {
        const TestCase& tc = matrix.cases[i];
        auto [trace, report] = simulate(tc, s, fut, cfg);
        results[i] = {tc.case_index, tc.scenario_id, tc.provenance, report};
      } catch (...) {
        const std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  if (workers == 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::sort(results.begin(), results.end(),
            [](const RunResult& a, const RunResult& b) {
              return a.case_index < b.case_index;
            });
  return results;
}

// Results serialization: JSON lines, one case per line, aligned with the
// matrix by case_index.

inline nlohmann::json to_json(const SpiReport& r) {
  return {{"min_ttc", r.min_ttc ? nlohmann::json(*r.min_ttc) : nlohmann::json()},
          {"min_gap", r.min_gap},
          {"msdv_duration", r.msdv_duration},
          {"collision", r.collision}};
}

inline nlohmann::json to_json(const RunResult& r) {
  nlohmann::json j = to_json(r.report);
  j["case_index"] = r.case_index;
  j["scenario_id"] = r.scenario_id;
  j["provenance"] = to_json(r.provenance);
  return j;
}

inline std::string serialize(const std::vector<RunResult>& results) {
  std::ostringstream out;
  for (const auto& r : results) out << to_json(r).dump() << "\n";
  return out.str();
}

inline std::vector<RunResult> parse_results(const std::string& text) {
  std::vector<RunResult> results;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = "results line " + std::to_string(line_no);
    const nlohmann::json j = detail::parse_json(line);
    detail::reject_unknown_keys(j,
                                {"case_index", "scenario_id", "provenance", "min_ttc",
                                 "min_gap", "msdv_duration", "collision"},
                                context);
    RunResult r;
    if (!detail::has_value(j, "case_index") ||
        !j.at("case_index").is_number_unsigned()) {
      fail(ErrorCode::syntax_error, context + ": missing case_index");
    }
    r.case_index = j.at("case_index").get<std::size_t>();
    r.scenario_id = detail::get_string(j, "scenario_id", context);
    if (!detail::has_value(j, "provenance")) {
      fail(ErrorCode::syntax_error, context + ": missing provenance");
    }
    r.provenance = detail::parse_provenance(j.at("provenance"), context);
    if (detail::has_value(j, "min_ttc")) {
      r.report.min_ttc = detail::as_finite_double(j.at("min_ttc"), context + ".min_ttc");
    }
    r.report.min_gap = detail::get_finite_double(j, "min_gap", context);
    r.report.msdv_duration = detail::get_finite_double(j, "msdv_duration", context);
    if (!detail::has_value(j, "collision") || !j.at("collision").is_boolean()) {
      fail(ErrorCode::syntax_error, context + ": missing collision flag");
    }
    r.report.collision = j.at("collision").get<bool>();
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace sotifval
