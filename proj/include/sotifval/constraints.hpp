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
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sotifval/entity_id.hpp"
#include "sotifval/errors.hpp"
#include "sotifval/interval.hpp"
#include "sotifval/json_util.hpp"
#include "sotifval/ontology.hpp"
#include "sotifval/scenario.hpp"
#include "sotifval/validation.hpp"

namespace sotifval {

enum class ConstraintType { max, min, range, factor, fixed };

inline const char* to_string(ConstraintType t) {
  switch (t) {
    case ConstraintType::max: return "MAX";
    case ConstraintType::min: return "MIN";
    case ConstraintType::range: return "RANGE";
    case ConstraintType::factor: return "FACTOR";
    case ConstraintType::fixed: return "FIXED";
  }
  return "?";
}

/// A typed bound on one ontology param. Scalar types use `value`; RANGE uses
/// `bounds`.
struct ScenarioConstraint {
  EntityId param;
  ConstraintType ctype = ConstraintType::max;
  double value = 0.0;
  Interval bounds{0.0, 0.0};

  static ScenarioConstraint scalar(EntityId param, ConstraintType t, double v) {
    ScenarioConstraint c;
    c.param = std::move(param);
    c.ctype = t;
    c.value = v;
    return c;
  }
  static ScenarioConstraint range(EntityId param, Interval iv) {
    ScenarioConstraint c;
    c.param = std::move(param);
    c.ctype = ConstraintType::range;
    c.bounds = iv;
    return c;
  }

  /// Interval form relative to the param's physical bounds; FACTOR has none.
  Interval normalized(const Interval& physical) const {
    switch (ctype) {
      case ConstraintType::max: return {physical.lo, value};
      case ConstraintType::min: return {value, physical.hi};
      case ConstraintType::range: return bounds;
      case ConstraintType::fixed: return Interval::point(value);
      case ConstraintType::factor: break;
    }
    return Interval::unbounded();
  }

  std::string describe() const {
    if (ctype == ConstraintType::range) {
      return std::string(to_string(ctype)) + " [" + std::to_string(bounds.lo) + ", " +
             std::to_string(bounds.hi) + "]";
    }
    return std::string(to_string(ctype)) + " " + std::to_string(value);
  }

  bool operator==(const ScenarioConstraint&) const = default;
  auto operator<=>(const ScenarioConstraint&) const = default;
};

/// A named combination of scenario constraints, composable from other
/// triggering conditions by id.
struct TriggeringCondition {
  std::string id;
  std::string name;
  std::vector<ScenarioConstraint> constraints;
  std::vector<std::string> sub_conditions;

  bool operator==(const TriggeringCondition&) const = default;
};

enum class ProvenanceRole { active, overridden };

inline const char* to_string(ProvenanceRole r) {
  return r == ProvenanceRole::active ? "active" : "overridden";
}

/// Records which triggering condition contributed a constraint to a merged
/// entry and whether it survived the override rule.
struct ProvenanceEntry {
  std::string tc_id;
  ScenarioConstraint constraint;
  ProvenanceRole role = ProvenanceRole::active;

  bool operator==(const ProvenanceEntry&) const = default;
};

struct EffectiveEntry {
  Interval admissible = Interval::unbounded();
  double factor = 1.0;
  std::vector<ProvenanceEntry> provenance;

  bool override_fired() const {
    for (const auto& p : provenance) {
      if (p.role == ProvenanceRole::overridden) return true;
    }
    return false;
  }

  bool operator==(const EffectiveEntry&) const = default;
};

/// Per-param result of merging constraints: the admissible interval, the
/// composed factor, and the provenance of both.
struct EffectiveConstraintSet {
  std::map<EntityId, EffectiveEntry> params;
  std::vector<std::string> warnings;

  bool operator==(const EffectiveConstraintSet&) const = default;
};

using TcLookup = std::function<const TriggeringCondition*(const std::string&)>;

namespace detail {

inline void flatten_into(const TriggeringCondition& tc, const TcLookup& lookup,
                         std::vector<std::string>& on_path,
                         std::set<std::string>& visited,
                         std::vector<std::pair<std::string, ScenarioConstraint>>& out) {
  for (const auto& seen : on_path) {
    if (seen == tc.id) {
      fail(ErrorCode::cyclic_composition,
           "triggering condition \"" + tc.id + "\" is part of a composition cycle",
           tc.id);
    }
  }
  // A condition reachable along several composition branches contributes its
  // constraints once.
  if (!visited.insert(tc.id).second) return;
  on_path.push_back(tc.id);
  for (const auto& c : tc.constraints) {
    out.emplace_back(tc.id, c);
  }
  for (const auto& sub_id : tc.sub_conditions) {
    const TriggeringCondition* sub = lookup(sub_id);
    if (sub == nullptr) {
      fail(ErrorCode::unknown_sub_condition,
           "triggering condition \"" + tc.id + "\" references unknown sub-condition \"" +
               sub_id + "\"",
           sub_id);
    }
    flatten_into(*sub, lookup, on_path, visited, out);
  }
  on_path.pop_back();
}

}  // namespace detail

/// Depth-first collection of all constraints with provenance: a condition's
/// own constraints first, then its sub-conditions in declaration order.
inline std::vector<std::pair<std::string, ScenarioConstraint>> flatten(
    const TriggeringCondition& tc, const TcLookup& lookup) {
  std::vector<std::pair<std::string, ScenarioConstraint>> out;
  std::vector<std::string> on_path;
  std::set<std::string> visited;
  detail::flatten_into(tc, lookup, on_path, visited, out);
  return out;
}

namespace detail {

struct MergeCandidate {
  std::string tc_id;
  ScenarioConstraint constraint;
  Interval normalized;
};

inline bool worse_endpoint(const MergeCandidate& a, const MergeCandidate& b,
                           LimitingDirection dir) {
  if (dir == LimitingDirection::lower_is_worse) return a.normalized.lo < b.normalized.lo;
  return a.normalized.hi > b.normalized.hi;
}

inline bool same_extreme(const MergeCandidate& a, const MergeCandidate& b,
                         LimitingDirection dir) {
  if (dir == LimitingDirection::lower_is_worse) return a.normalized.lo == b.normalized.lo;
  return a.normalized.hi == b.normalized.hi;
}

inline bool provenance_before(const ProvenanceEntry& a, const ProvenanceEntry& b) {
  if (a.tc_id != b.tc_id) return a.tc_id < b.tc_id;
  if (a.constraint != b.constraint) return a.constraint < b.constraint;
  return a.role < b.role;
}

}  // namespace detail

/// Merges constraints into per-param admissible intervals and factors under
/// the most-limiting override rule. Ordinary compatible constraints intersect;
/// when the intersection is empty, or collapses to a single point while the
/// sources disagree, the constraint whose worst-case endpoint is most extreme
/// in the param's limiting direction overrides the rest. Factors never
/// conflict; they multiply.
inline EffectiveConstraintSet merge(
    const std::vector<std::pair<std::string, ScenarioConstraint>>& constraints,
    const Ontology& ontology) {
  struct Bucket {
    std::vector<detail::MergeCandidate> intervals;
    std::vector<std::pair<std::string, ScenarioConstraint>> factors;
  };
  std::map<EntityId, Bucket> buckets;

  std::map<EntityId, const OntologyEntity*> param_info;
  for (const auto& [tc_id, constraint] : constraints) {
    auto [it, inserted] = param_info.emplace(constraint.param, nullptr);
    if (inserted) {
      try {
        it->second = &ontology.resolve_param(constraint.param);
      } catch (const Error&) {
        fail(ErrorCode::unresolved_param,
             "constraint references \"" + constraint.param.str() +
                 "\" which is not a PARAM in the ontology",
             constraint.param.str());
      }
    }
    Bucket& bucket = buckets[constraint.param];
    if (constraint.ctype == ConstraintType::factor) {
      bucket.factors.emplace_back(tc_id, constraint);
    } else {
      bucket.intervals.push_back(
          {tc_id, constraint,
           constraint.normalized(it->second->bounds_or_unbounded())});
    }
  }

  EffectiveConstraintSet ecs;
  for (auto& [param, bucket] : buckets) {
    const OntologyEntity& info = *param_info.at(param);
    const LimitingDirection dir = info.direction();
    EffectiveEntry entry;
    entry.admissible = info.bounds_or_unbounded();

    // Two FIXED constraints that pin different values cannot be reconciled
    // by picking a more limiting interval; that combination is infeasible.
    std::optional<double> fixed_value;
    for (const auto& c : bucket.intervals) {
      if (c.constraint.ctype != ConstraintType::fixed) continue;
      if (fixed_value && *fixed_value != c.constraint.value) {
        fail(ErrorCode::infeasible_constraints,
             "param \"" + param.str() + "\" is FIXED to both " +
                 std::to_string(*fixed_value) + " and " +
                 std::to_string(c.constraint.value),
             param.str());
      }
      fixed_value = c.constraint.value;
    }

    bool fire_override = false;
    if (!bucket.intervals.empty()) {
      std::optional<Interval> intersection = bucket.intervals[0].normalized;
      for (std::size_t i = 1; i < bucket.intervals.size() && intersection; ++i) {
        intersection = intersection->intersect(bucket.intervals[i].normalized);
      }
      std::set<std::pair<double, double>> distinct;
      for (const auto& c : bucket.intervals) {
        distinct.insert({c.normalized.lo, c.normalized.hi});
      }
      if (!intersection) {
        fire_override = true;
      } else if (intersection->degenerate() && distinct.size() > 1) {
        fire_override = true;
      } else {
        entry.admissible = *intersection;
      }
    }

    if (fire_override) {
      const detail::MergeCandidate* winner = &bucket.intervals[0];
      for (const auto& c : bucket.intervals) {
        if (detail::worse_endpoint(c, *winner, dir)) winner = &c;
      }
      std::vector<const detail::MergeCandidate*> tied;
      for (const auto& c : bucket.intervals) {
        if (detail::same_extreme(c, *winner, dir)) tied.push_back(&c);
      }
      bool ambiguous = false;
      for (const auto* c : tied) {
        if (!(c->normalized == winner->normalized)) ambiguous = true;
      }
      // Narrower interval first, then lexicographically smaller TC id.
      for (const auto* c : tied) {
        const double cw = c->normalized.width();
        const double ww = winner->normalized.width();
        if (cw < ww || (cw == ww && c->tc_id < winner->tc_id)) winner = c;
      }
      if (ambiguous) {
        ecs.warnings.push_back("degenerate override on \"" + param.str() +
                               "\": tie resolved in favour of \"" + winner->tc_id +
                               "\" (" + winner->constraint.describe() + ")");
      }
      entry.admissible = winner->normalized;
      for (const auto& c : bucket.intervals) {
        const bool is_winner = c.constraint == winner->constraint &&
                               c.tc_id == winner->tc_id;
        entry.provenance.push_back(
            {c.tc_id, c.constraint,
             is_winner ? ProvenanceRole::active : ProvenanceRole::overridden});
      }
    } else {
      for (const auto& c : bucket.intervals) {
        entry.provenance.push_back({c.tc_id, c.constraint, ProvenanceRole::active});
      }
    }

    // Multiply in sorted order so the product is bit-identical under input
    // permutation.
    std::vector<double> factor_values;
    for (const auto& [tc_id, constraint] : bucket.factors) {
      factor_values.push_back(constraint.value);
      entry.provenance.push_back({tc_id, constraint, ProvenanceRole::active});
    }
    std::sort(factor_values.begin(), factor_values.end());
    for (const double f : factor_values) entry.factor *= f;

    std::sort(entry.provenance.begin(), entry.provenance.end(),
              detail::provenance_before);
    ecs.params.emplace(param, std::move(entry));
  }
  std::sort(ecs.warnings.begin(), ecs.warnings.end());
  return ecs;
}

/// Per-param sampling instruction derived from scenario and constraints:
/// sample `interval`, multiply by `factor`, clamp to physical bounds.
struct SamplingSpec {
  Interval interval{0.0, 0.0};
  double factor = 1.0;
  Interval physical = Interval::unbounded();
  bool fixed = false;

  bool operator==(const SamplingSpec&) const = default;
};

/// Scenario plus resolved sampling specs for every declared param.
struct ConstrainedScenario {
  Scenario scenario;
  std::map<EntityId, SamplingSpec> sampling;
  std::vector<std::string> tc_ids;

  bool operator==(const ConstrainedScenario&) const = default;
};

/// Narrows the scenario's sampling ranges by the effective constraints.
/// A param the scenario fixes keeps its value (factors still apply at
/// sampling time); a free param samples the intersection of its scenario
/// range with the admissible interval.
inline ConstrainedScenario apply_to_scenario(const EffectiveConstraintSet& ecs,
                                             const Scenario& s,
                                             const Ontology& ontology) {
  ConstrainedScenario out;
  out.scenario = s;
  for (const auto& p : s.params) {
    const OntologyEntity& info = ontology.resolve_param(p.param);
    SamplingSpec spec;
    spec.physical = info.bounds_or_unbounded();
    if (p.fixed()) {
      spec.interval = Interval::point(*p.value);
      spec.fixed = true;
    } else {
      spec.interval = *p.range;
    }
    const auto it = ecs.params.find(p.param);
    if (it != ecs.params.end()) {
      spec.factor = it->second.factor;
      // Physical bounds participate so an out-of-bounds admissible interval
      // can never produce unphysical samples.
      std::optional<Interval> narrowed = spec.interval.intersect(it->second.admissible);
      if (narrowed) narrowed = narrowed->intersect(spec.physical);
      if (!narrowed) {
        fail(ErrorCode::empty_sampling_range,
             "param \"" + p.param.str() +
                 "\": scenario range and admissible interval are disjoint; the "
                 "condition cannot occur in this scenario",
             p.param.str());
      }
      spec.interval = *narrowed;
      spec.fixed = spec.fixed || spec.interval.degenerate();
    }
    out.sampling.emplace(p.param, spec);
  }
  return out;
}

// Triggering condition document format.

namespace detail {

inline ScenarioConstraint parse_constraint(const nlohmann::json& j,
                                           const std::string& context) {
  reject_unknown_keys(j, {"param", "type", "value"}, context);
  ScenarioConstraint c;
  c.param = EntityId::parse(get_string(j, "param", context));
  const std::string type = get_string(j, "type", context);
  const std::string vcontext = context + " \"" + c.param.str() + "\"";
  if (type == "RANGE") {
    c.ctype = ConstraintType::range;
    if (!has_value(j, "value")) {
      fail(ErrorCode::syntax_error, vcontext + ": missing value", c.param.str());
    }
    c.bounds = as_interval(j.at("value"), vcontext + ".value");
  } else {
    if (type == "MAX") {
      c.ctype = ConstraintType::max;
    } else if (type == "MIN") {
      c.ctype = ConstraintType::min;
    } else if (type == "FACTOR") {
      c.ctype = ConstraintType::factor;
    } else if (type == "FIXED") {
      c.ctype = ConstraintType::fixed;
    } else {
      fail(ErrorCode::syntax_error, vcontext + ": unknown constraint type \"" + type +
                                        "\"", c.param.str());
    }
    c.value = get_finite_double(j, "value", vcontext);
  }
  return c;
}

}  // namespace detail

inline TriggeringCondition load_tc(const std::string& document) {
  const nlohmann::json doc = detail::parse_json(document);
  detail::reject_unknown_keys(doc, {"id", "name", "constraints", "sub_conditions"},
                              "triggering condition");
  TriggeringCondition tc;
  tc.id = detail::get_string(doc, "id", "triggering condition");
  const std::string context = "triggering condition \"" + tc.id + "\"";
  if (detail::has_value(doc, "name")) {
    tc.name = detail::get_string(doc, "name", context);
  }
  if (detail::has_value(doc, "constraints")) {
    if (!doc.at("constraints").is_array()) {
      fail(ErrorCode::syntax_error, context + ": constraints must be an array", tc.id);
    }
    for (const auto& cj : doc.at("constraints")) {
      tc.constraints.push_back(detail::parse_constraint(cj, context + ".constraints"));
    }
  }
  if (detail::has_value(doc, "sub_conditions")) {
    if (!doc.at("sub_conditions").is_array()) {
      fail(ErrorCode::syntax_error, context + ": sub_conditions must be an array",
           tc.id);
    }
    for (const auto& sj : doc.at("sub_conditions")) {
      if (!sj.is_string()) {
        fail(ErrorCode::syntax_error, context + ": sub_conditions entries must be "
                                          "triggering condition ids", tc.id);
      }
      tc.sub_conditions.push_back(sj.get<std::string>());
    }
  }
  return tc;
}

inline nlohmann::json to_json(const ScenarioConstraint& c) {
  nlohmann::json j{{"param", c.param.str()}, {"type", to_string(c.ctype)}};
  if (c.ctype == ConstraintType::range) {
    j["value"] = detail::interval_to_json(c.bounds);
  } else {
    j["value"] = c.value;
  }
  return j;
}

inline nlohmann::json to_json(const TriggeringCondition& tc) {
  nlohmann::json constraints = nlohmann::json::array();
  for (const auto& c : tc.constraints) constraints.push_back(to_json(c));
  return {{"id", tc.id},
          {"name", tc.name},
          {"constraints", constraints},
          {"sub_conditions", tc.sub_conditions}};
}

inline std::string serialize(const TriggeringCondition& tc) {
  return to_json(tc).dump(2) + "\n";
}

/// Validates a triggering condition's constraints against the ontology.
/// Sub-condition resolution is the business of flatten, which has catalog
/// access; this checks only what the ontology can answer.
inline ValidationReport validate_tc(const TriggeringCondition& tc,
                                    const Ontology& ontology) {
  ValidationReport report;
  const std::string tid = tc.id.empty() ? "triggering condition" : tc.id;
  if (tc.id.empty()) {
    report.add_error(tid, "id must be non-empty");
  }
  for (const auto& c : tc.constraints) {
    const std::string path = c.param.str();
    const OntologyEntity* e = ontology.find(c.param);
    if (e == nullptr || e->kind != EntityKind::param) {
      report.add_error(path, "unresolved param \"" + path + "\"");
      continue;
    }
    const Interval bounds = e->bounds_or_unbounded();
    switch (c.ctype) {
      case ConstraintType::factor:
        if (!(c.value > 0.0 && c.value <= 1.0)) {
          report.add_error(path, "FACTOR value must be in (0, 1]");
        }
        break;
      case ConstraintType::range:
        if (!c.bounds.valid()) {
          report.add_error(path, "RANGE lower bound exceeds upper bound");
        } else if (c.bounds.lo < bounds.lo || c.bounds.hi > bounds.hi) {
          report.add_error(path, "RANGE outside physical bounds");
        }
        break;
      case ConstraintType::max:
      case ConstraintType::min:
      case ConstraintType::fixed:
        if (!bounds.contains(c.value)) {
          report.add_error(path, std::string(to_string(c.ctype)) +
                                     " value outside physical bounds");
        }
        break;
    }
  }
  for (const auto& sub : tc.sub_conditions) {
    if (sub.empty()) {
      report.add_error(tid, "sub_conditions entries must be non-empty ids");
    }
    if (sub == tc.id) {
      report.add_error(tid, "triggering condition lists itself as a sub-condition");
    }
  }
  return report;
}

/// Document-level validation: load errors become report entries.
inline ValidationReport validate_tc_document(const std::string& document,
                                             const Ontology& ontology) {
  try {
    return validate_tc(load_tc(document), ontology);
  } catch (const Error& e) {
    ValidationReport report;
    report.add_error(e.entity(), e.what());
    return report;
  }
}

inline nlohmann::json to_json(const EffectiveConstraintSet& ecs) {
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [param, entry] : ecs.params) {
    nlohmann::json provenance = nlohmann::json::array();
    for (const auto& p : entry.provenance) {
      provenance.push_back({{"tc", p.tc_id},
                            {"constraint", to_json(p.constraint)},
                            {"role", to_string(p.role)}});
    }
    params[param.str()] = {{"interval", detail::interval_to_json(entry.admissible)},
                           {"factor", entry.factor},
                           {"provenance", provenance}};
  }
  return {{"params", params}, {"warnings", ecs.warnings}};
}

}  // namespace sotifval
