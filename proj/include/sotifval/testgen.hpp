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
#include <cstdint>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "sotifval/constraints.hpp"
#include "sotifval/entity_id.hpp"
#include "sotifval/errors.hpp"
#include "sotifval/interval.hpp"
#include "sotifval/json_util.hpp"
#include "sotifval/scenario.hpp"

namespace sotifval {

/// Where a test case came from: the nominal baseline or a set of injected
/// triggering conditions.
struct Provenance {
  std::vector<std::string> tc_ids;

  static Provenance nominal() { return {}; }
  static Provenance tc_set(std::vector<std::string> ids) { return {std::move(ids)}; }
  bool is_nominal() const { return tc_ids.empty(); }

  bool operator==(const Provenance&) const = default;
};

/// One concrete parameter vector, simulation-ready: assignments are
/// post-factor values and include the scenario's fixed params.
struct TestCase {
  std::size_t case_index = 0;
  std::string scenario_id;
  Provenance provenance;
  std::map<EntityId, double> assignment;

  bool operator==(const TestCase&) const = default;
};

/// Ordered list of test cases plus the per-param level lists the free
/// params were drawn from.
struct TestMatrix {
  std::vector<TestCase> cases;
  std::map<EntityId, std::vector<double>> domains;

  bool operator==(const TestMatrix&) const = default;
};

/// Level counts for discretization: a default with per-param overrides.
struct LevelSpec {
  int default_levels = 3;
  std::map<EntityId, int> per_param;

  int at(const EntityId& id) const {
    const auto it = per_param.find(id);
    return it == per_param.end() ? default_levels : it->second;
  }
};

/// Uniformly spaced sample values over a closed interval: the midpoint for
/// k = 1, both endpoints included for k >= 2. Degenerate intervals collapse
/// to a single value.
inline std::vector<double> discretize(const Interval& interval, int levels) {
  if (levels < 1) {
    fail(ErrorCode::invalid_levels, "levels must be at least 1");
  }
  if (!interval.valid()) {
    fail(ErrorCode::empty_sampling_range, "cannot discretize an empty interval");
  }
  std::vector<double> out;
  if (levels == 1 || interval.degenerate()) {
    out.push_back(levels == 1 ? interval.midpoint() : interval.lo);
    return out;
  }
  out.reserve(static_cast<std::size_t>(levels));
  for (int i = 0; i < levels; ++i) {
    const double t = static_cast<double>(i) / static_cast<double>(levels - 1);
    out.push_back(interval.lo + t * (interval.hi - interval.lo));
  }
  out.front() = interval.lo;
  out.back() = interval.hi;
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

/// Post-factor, bounds-clamped level list for one sampling spec.
inline std::vector<double> levels_for(const SamplingSpec& spec, int k) {
  std::vector<double> raw = discretize(spec.interval, spec.fixed ? 1 : k);
  for (double& v : raw) {
    v = spec.physical.clamp(v * spec.factor);
  }
  raw.erase(std::unique(raw.begin(), raw.end()), raw.end());
  return raw;
}

struct DomainView {
  std::vector<EntityId> free_params;          // path-sorted
  std::vector<std::vector<double>> levels;    // aligned with free_params
  std::map<EntityId, double> fixed_values;
};

inline DomainView domain_view(const ConstrainedScenario& cs, const LevelSpec& spec) {
  DomainView view;
  for (const auto& [param, sampling] : cs.sampling) {
    const auto values = levels_for(sampling, spec.at(param));
    if (sampling.fixed) {
      view.fixed_values.emplace(param, values.front());
    } else {
      view.free_params.push_back(param);
      view.levels.push_back(values);
    }
  }
  return view;
}

inline void append_case(TestMatrix& matrix, const std::string& scenario_id,
                        const Provenance& prov, std::map<EntityId, double> assignment) {
  TestCase tc;
  tc.case_index = matrix.cases.size();
  tc.scenario_id = scenario_id;
  tc.provenance = prov;
  tc.assignment = std::move(assignment);
  matrix.cases.push_back(std::move(tc));
}

/// Greedy pairwise covering rows over the given domain sizes. Entries are
/// level indices; construction order is deterministic, remaining don't-cares
/// are filled from the rng.
inline std::vector<std::vector<int>> covering_rows(const std::vector<int>& sizes,
                                                   std::mt19937_64& rng) {
  const std::size_t n = sizes.size();
  std::vector<std::vector<int>> rows;
  if (n == 0) return rows;

  // Work in decreasing-domain-size order so the seed factorial is largest.
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return sizes[a] > sizes[b]; });

  std::vector<int> ordered_sizes(n);
  for (std::size_t i = 0; i < n; ++i) ordered_sizes[i] = sizes[order[i]];

  if (n == 1) {
    for (int v = 0; v < ordered_sizes[0]; ++v) rows.push_back({v});
  } else {
    for (int a = 0; a < ordered_sizes[0]; ++a) {
      for (int b = 0; b < ordered_sizes[1]; ++b) {
        std::vector<int> row(n, -1);
        row[0] = a;
        row[1] = b;
        rows.push_back(std::move(row));
      }
    }

    for (std::size_t t = 2; t < n; ++t) {
      // Pairs (q, a, v) still missing between column q < t and column t.
      std::set<std::tuple<std::size_t, int, int>> uncovered;
      for (std::size_t q = 0; q < t; ++q) {
        for (int a = 0; a < ordered_sizes[q]; ++a) {
          for (int v = 0; v < ordered_sizes[t]; ++v) uncovered.insert({q, a, v});
        }
      }

      for (auto& row : rows) {
        int best_v = 0;
        std::size_t best_gain = 0;
        for (int v = 0; v < ordered_sizes[t]; ++v) {
          std::size_t gain = 0;
          for (std::size_t q = 0; q < t; ++q) {
            if (row[q] >= 0 && uncovered.count({q, row[q], v}) != 0) ++gain;
          }
          if (gain > best_gain) {
            best_gain = gain;
            best_v = v;
          }
        }
        row[t] = best_v;
        for (std::size_t q = 0; q < t; ++q) {
          if (row[q] >= 0) uncovered.erase({q, row[q], best_v});
        }
      }

      // Vertical growth: place leftover pairs into don't-care slots of rows
      // added in this phase, appending fresh rows when nothing fits.
      const std::size_t vertical_start = rows.size();
      const std::set<std::tuple<std::size_t, int, int>> leftover = uncovered;
      for (const auto& [q, a, v] : leftover) {
        bool placed = false;
        for (std::size_t r = vertical_start; r < rows.size() && !placed; ++r) {
          auto& row = rows[r];
          if ((row[q] == -1 || row[q] == a) && (row[t] == -1 || row[t] == v)) {
            row[q] = a;
            row[t] = v;
            placed = true;
          }
        }
        if (!placed) {
          std::vector<int> row(n, -1);
          row[q] = a;
          row[t] = v;
          rows.push_back(std::move(row));
        }
      }
    }
  }

  for (auto& row : rows) {
    for (std::size_t i = 0; i < n; ++i) {
      if (row[i] == -1) {
        row[i] = static_cast<int>(rng() % static_cast<std::uint64_t>(ordered_sizes[i]));
      }
    }
  }

  // Undo the size ordering and drop duplicate rows, keeping first occurrence.
  std::vector<std::vector<int>> out;
  std::set<std::vector<int>> seen;
  for (const auto& row : rows) {
    std::vector<int> original(n);
    for (std::size_t i = 0; i < n; ++i) original[order[i]] = row[i];
    if (seen.insert(original).second) out.push_back(std::move(original));
  }
  return out;
}

}  // namespace detail

/// Full factorial matrix over the constrained sampling intervals. Cases are
/// ordered with the path-wise first param as the slowest axis; the first
/// case takes every param's lowest level.
inline TestMatrix generate_grid(const ConstrainedScenario& cs, const LevelSpec& spec,
                                const Provenance& prov) {
  const detail::DomainView view = detail::domain_view(cs, spec);
  TestMatrix matrix;
  for (std::size_t i = 0; i < view.free_params.size(); ++i) {
    matrix.domains.emplace(view.free_params[i], view.levels[i]);
  }

  std::vector<std::size_t> idx(view.free_params.size(), 0);
  while (true) {
    std::map<EntityId, double> assignment = view.fixed_values;
    for (std::size_t i = 0; i < view.free_params.size(); ++i) {
      assignment.emplace(view.free_params[i], view.levels[i][idx[i]]);
    }
    detail::append_case(matrix, cs.scenario.id, prov, std::move(assignment));
    // Odometer with the last param fastest.
    std::size_t i = idx.size();
    while (i > 0) {
      --i;
      if (++idx[i] < view.levels[i].size()) break;
      idx[i] = 0;
      if (i == 0) return matrix;
    }
    if (idx.empty()) return matrix;
  }
}

/// Pairwise covering matrix over explicit per-param level lists: every
/// cross-param pair of levels appears in at least one case.
inline TestMatrix reduce_pairwise(const std::map<EntityId, std::vector<double>>& domains,
                                  std::uint64_t seed,
                                  const std::string& scenario_id = "",
                                  const Provenance& prov = Provenance::nominal(),
                                  const std::map<EntityId, double>& fixed_values = {}) {
  std::vector<EntityId> params;
  std::vector<int> sizes;
  for (const auto& [param, levels] : domains) {
    if (levels.empty()) {
      fail(ErrorCode::empty_sampling_range,
           "param \"" + param.str() + "\" has no levels", param.str());
    }
    params.push_back(param);
    sizes.push_back(static_cast<int>(levels.size()));
  }

  TestMatrix matrix;
  matrix.domains = domains;
  if (params.empty()) {
    detail::append_case(matrix, scenario_id, prov, fixed_values);
    return matrix;
  }

  std::mt19937_64 rng(seed);
  for (const auto& row : detail::covering_rows(sizes, rng)) {
    std::map<EntityId, double> assignment = fixed_values;
    for (std::size_t i = 0; i < params.size(); ++i) {
      assignment.emplace(params[i],
                         domains.at(params[i])[static_cast<std::size_t>(row[i])]);
    }
    detail::append_case(matrix, scenario_id, prov, std::move(assignment));
  }
  return matrix;
}

/// Pairwise covering matrix for a constrained scenario.
inline TestMatrix reduce_pairwise(const ConstrainedScenario& cs, const LevelSpec& spec,
                                  const Provenance& prov, std::uint64_t seed) {
  const detail::DomainView view = detail::domain_view(cs, spec);
  std::map<EntityId, std::vector<double>> domains;
  for (std::size_t i = 0; i < view.free_params.size(); ++i) {
    domains.emplace(view.free_params[i], view.levels[i]);
  }
  return reduce_pairwise(domains, seed, cs.scenario.id, prov, view.fixed_values);
}

/// Baseline matrix over the scenario's own ranges, no constraints injected.
inline TestMatrix generate_nominal(const Scenario& s, const Ontology& ontology,
                                   const LevelSpec& spec) {
  const ConstrainedScenario cs =
      apply_to_scenario(EffectiveConstraintSet{}, s, ontology);
  return generate_grid(cs, spec, Provenance::nominal());
}

// Matrix serialization: JSON lines, one case per line.

inline nlohmann::json to_json(const Provenance& prov) {
  if (prov.is_nominal()) return "NOMINAL";
  return {{"tc_set", prov.tc_ids}};
}

inline nlohmann::json to_json(const TestCase& tc) {
  nlohmann::json assignment = nlohmann::json::object();
  for (const auto& [param, value] : tc.assignment) assignment[param.str()] = value;
  return {{"case_index", tc.case_index},
          {"scenario_id", tc.scenario_id},
          {"provenance", to_json(tc.provenance)},
          {"assignment", assignment}};
}

inline std::string serialize(const TestMatrix& matrix) {
  std::ostringstream out;
  for (const auto& tc : matrix.cases) out << to_json(tc).dump() << "\n";
  return out.str();
}

namespace detail {

inline Provenance parse_provenance(const nlohmann::json& j, const std::string& context) {
  if (j.is_string()) {
    if (j.get<std::string>() != "NOMINAL") {
      fail(ErrorCode::syntax_error,
           context + ": provenance must be \"NOMINAL\" or {\"tc_set\": [...]}");
    }
    return Provenance::nominal();
  }
  reject_unknown_keys(j, {"tc_set"}, context + ".provenance");
  std::vector<std::string> ids;
  if (!has_value(j, "tc_set") || !j.at("tc_set").is_array()) {
    fail(ErrorCode::syntax_error, context + ": provenance.tc_set must be an array");
  }
  for (const auto& id : j.at("tc_set")) {
    if (!id.is_string()) {
      fail(ErrorCode::syntax_error, context + ": tc_set entries must be strings");
    }
    ids.push_back(id.get<std::string>());
  }
  return Provenance::tc_set(std::move(ids));
}

}  // namespace detail

inline TestMatrix parse_matrix(const std::string& text) {
  TestMatrix matrix;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = "matrix line " + std::to_string(line_no);
    const nlohmann::json j = detail::parse_json(line);
    detail::reject_unknown_keys(
        j, {"case_index", "scenario_id", "provenance", "assignment"}, context);
    TestCase tc;
    if (!detail::has_value(j, "case_index") ||
        !j.at("case_index").is_number_unsigned()) {
      fail(ErrorCode::syntax_error, context + ": missing case_index");
    }
    tc.case_index = j.at("case_index").get<std::size_t>();
    tc.scenario_id = detail::get_string(j, "scenario_id", context);
    if (!detail::has_value(j, "provenance")) {
      fail(ErrorCode::syntax_error, context + ": missing provenance");
    }
    tc.provenance = detail::parse_provenance(j.at("provenance"), context);
    if (!detail::has_value(j, "assignment")) {
      fail(ErrorCode::syntax_error, context + ": missing assignment");
    }
    detail::require_object(j.at("assignment"), context + ".assignment");
    for (const auto& [key, value] : j.at("assignment").items()) {
      tc.assignment.emplace(EntityId::parse(key),
                            detail::as_finite_double(value, context + "." + key));
    }
    matrix.cases.push_back(std::move(tc));
  }
  return matrix;
}

}  // namespace sotifval
