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

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "sotifval/entity_id.hpp"
#include "sotifval/errors.hpp"
#include "sotifval/interval.hpp"
#include "sotifval/json_util.hpp"
#include "sotifval/ontology.hpp"
#include "sotifval/validation.hpp"

namespace sotifval {

using AttrValue = std::variant<double, std::string>;

/// One element of a scenario layer, e.g. a lead vehicle or a roadwork sign.
/// The kind token must belong to the per-layer vocabulary.
struct SceneElement {
  std::string kind;
  std::map<std::string, AttrValue> attrs;

  const double* num_attr(const std::string& key) const {
    const auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : std::get_if<double>(&it->second);
  }
  const std::string* str_attr(const std::string& key) const {
    const auto it = attrs.find(key);
    return it == attrs.end() ? nullptr : std::get_if<std::string>(&it->second);
  }

  bool operator==(const SceneElement&) const = default;
};

/// Binds one ontology param either to a fixed value or to a sampling range.
struct ParamAssignment {
  EntityId param;
  std::optional<double> value;
  std::optional<Interval> range;

  bool fixed() const { return value.has_value(); }

  bool operator==(const ParamAssignment&) const = default;
};

/// Minimal perception-and-brake model of the function under test: a sensor
/// with a hard range cap degraded by visibility and illuminance, a reaction
/// delay, and a friction-scaled braking capability.
struct FunctionUnderTest {
  double sensor_max_range = 200.0;   // m
  double reaction_time = 0.5;        // s
  double max_decel_at_mu1 = 6.0;     // m/s^2 at friction 1.0
  double illum_full = 1000.0;        // lux at which perception is undegraded
  double illum_floor_factor = 0.5;   // perception factor in total darkness

  bool operator==(const FunctionUnderTest&) const = default;
};

/// Six-layer scenario description: static road content through digital
/// information, plus the parametrisation that test generation samples.
struct Scenario {
  std::string id;
  std::vector<std::string> odd_tags;
  std::map<int, std::vector<SceneElement>> layers;
  std::vector<ParamAssignment> params;
  std::optional<FunctionUnderTest> function;

  const std::vector<SceneElement>* layer(int n) const {
    const auto it = layers.find(n);
    return it == layers.end() ? nullptr : &it->second;
  }

  /// First element of the given kind in layer n, if any.
  const SceneElement* find_element(int n, const std::string& kind) const {
    const auto* l = layer(n);
    if (l == nullptr) return nullptr;
    for (const auto& e : *l) {
      if (e.kind == kind) return &e;
    }
    return nullptr;
  }

  const ParamAssignment* find_param(const EntityId& id) const {
    for (const auto& p : params) {
      if (p.param == id) return &p;
    }
    return nullptr;
  }

  bool operator==(const Scenario&) const = default;
};

/// Closed per-layer vocabulary of scene element kinds. Unknown kinds are
/// validation errors, not extensions.
inline const std::map<int, std::set<std::string>>& layer_vocabulary() {
  static const std::map<int, std::set<std::string>> table = {
      {1, {"road_segment", "road_marking", "traffic_sign", "traffic_light"}},
      {2, {"building", "vegetation", "street_lamp", "advertising_board"}},
      {3, {"roadwork_sign", "temporary_marking", "covered_marking"}},
      {4, {"ego_vehicle", "lead_vehicle", "vehicle", "pedestrian", "trailer", "animal"}},
      {5, {"environmental_condition", "illumination", "precipitation", "road_weather"}},
      {6, {"traffic_light_state", "switchable_sign", "v2x_message"}},
  };
  return table;
}

/// Lead vehicle motion profiles the simulation kernel understands.
inline const std::set<std::string>& lead_profiles() {
  static const std::set<std::string> profiles = {"stopped", "constant_speed",
                                                 "scripted_decel"};
  return profiles;
}

namespace detail {

inline AttrValue parse_attr(const nlohmann::json& j, const std::string& context) {
  if (j.is_string()) return j.get<std::string>();
  return as_finite_double(j, context);
}

inline SceneElement parse_element(const nlohmann::json& j, const std::string& context) {
  reject_unknown_keys(j, {"kind", "attrs"}, context);
  SceneElement e;
  e.kind = get_string(j, "kind", context);
  if (has_value(j, "attrs")) {
    require_object(j.at("attrs"), context + ".attrs");
    for (const auto& [key, value] : j.at("attrs").items()) {
      e.attrs.emplace(key, parse_attr(value, context + ".attrs." + key));
    }
  }
  return e;
}

inline FunctionUnderTest parse_function(const nlohmann::json& j,
                                        const std::string& context) {
  reject_unknown_keys(j,
                      {"sensor_max_range", "reaction_time", "max_decel_at_mu1",
                       "illum_full", "illum_floor_factor"},
                      context);
  FunctionUnderTest fut;
  fut.sensor_max_range = get_finite_double(j, "sensor_max_range", context);
  fut.reaction_time = get_finite_double(j, "reaction_time", context);
  fut.max_decel_at_mu1 = get_finite_double(j, "max_decel_at_mu1", context);
  fut.illum_full = get_finite_double(j, "illum_full", context);
  fut.illum_floor_factor = get_finite_double(j, "illum_floor_factor", context);
  return fut;
}

}  // namespace detail

inline Scenario load_scenario(const std::string& document) {
  const nlohmann::json doc = detail::parse_json(document);
  detail::reject_unknown_keys(doc, {"id", "odd_tags", "layers", "params", "function"},
                              "scenario");
  Scenario s;
  s.id = detail::get_string(doc, "id", "scenario");
  const std::string context = "scenario \"" + s.id + "\"";

  if (detail::has_value(doc, "odd_tags")) {
    if (!doc.at("odd_tags").is_array()) {
      fail(ErrorCode::syntax_error, context + ": odd_tags must be an array", s.id);
    }
    for (const auto& t : doc.at("odd_tags")) {
      if (!t.is_string()) {
        fail(ErrorCode::syntax_error, context + ": odd_tags entries must be strings",
             s.id);
      }
      s.odd_tags.push_back(t.get<std::string>());
    }
  }

  if (detail::has_value(doc, "layers")) {
    detail::require_object(doc.at("layers"), context + ".layers");
    for (const auto& [key, value] : doc.at("layers").items()) {
      // Layer keys are the strings "1".."6"; anything else is malformed.
      if (key.size() != 1 || key[0] < '1' || key[0] > '6') {
        fail(ErrorCode::syntax_error, context + ": layer id \"" + key +
                                          "\" outside 1..6", s.id);
      }
      const int layer_id = key[0] - '0';
      if (!value.is_array()) {
        fail(ErrorCode::syntax_error,
             context + ": layer " + key + " must be an array", s.id);
      }
      auto& elements = s.layers[layer_id];
      std::size_t i = 0;
      for (const auto& ej : value) {
        elements.push_back(detail::parse_element(
            ej, context + ".layers." + key + "[" + std::to_string(i) + "]"));
        ++i;
      }
    }
  }

  if (detail::has_value(doc, "params")) {
    if (!doc.at("params").is_array()) {
      fail(ErrorCode::syntax_error, context + ": params must be an array", s.id);
    }
    for (const auto& pj : doc.at("params")) {
      detail::reject_unknown_keys(pj, {"param", "value", "range"}, context + ".params");
      ParamAssignment a;
      a.param = EntityId::parse(detail::get_string(pj, "param", context + ".params"));
      const std::string pcontext = context + ".params \"" + a.param.str() + "\"";
      const bool has_fixed = detail::has_value(pj, "value");
      const bool has_range = detail::has_value(pj, "range");
      if (has_fixed == has_range) {
        fail(ErrorCode::syntax_error,
             pcontext + ": exactly one of value/range required", a.param.str());
      }
      if (has_fixed) {
        a.value = detail::as_finite_double(pj.at("value"), pcontext + ".value");
      } else {
        a.range = detail::as_interval(pj.at("range"), pcontext + ".range");
      }
      for (const auto& existing : s.params) {
        if (existing.param == a.param) {
          fail(ErrorCode::duplicate_id,
               pcontext + ": param assigned more than once", a.param.str());
        }
      }
      s.params.push_back(std::move(a));
    }
  }

  if (detail::has_value(doc, "function")) {
    s.function = detail::parse_function(doc.at("function"), context + ".function");
  }
  return s;
}

inline nlohmann::json to_json(const SceneElement& e) {
  nlohmann::json attrs = nlohmann::json::object();
  for (const auto& [key, value] : e.attrs) {
    if (const auto* num = std::get_if<double>(&value)) {
      attrs[key] = *num;
    } else {
      attrs[key] = std::get<std::string>(value);
    }
  }
  return {{"kind", e.kind}, {"attrs", attrs}};
}

inline nlohmann::json to_json(const FunctionUnderTest& fut) {
  return {{"sensor_max_range", fut.sensor_max_range},
          {"reaction_time", fut.reaction_time},
          {"max_decel_at_mu1", fut.max_decel_at_mu1},
          {"illum_full", fut.illum_full},
          {"illum_floor_factor", fut.illum_floor_factor}};
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json layers = nlohmann::json::object();
  for (const auto& [layer_id, elements] : s.layers) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& e : elements) arr.push_back(to_json(e));
    layers[std::to_string(layer_id)] = arr;
  }
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : s.params) {
    nlohmann::json pj{{"param", p.param.str()}};
    if (p.value) {
      pj["value"] = *p.value;
    } else if (p.range) {
      pj["range"] = detail::interval_to_json(*p.range);
    }
    params.push_back(pj);
  }
  return {{"id", s.id},
          {"odd_tags", s.odd_tags},
          {"layers", layers},
          {"params", params},
          {"function", s.function ? to_json(*s.function) : nlohmann::json()}};
}

inline std::string serialize(const Scenario& s) { return to_json(s).dump(2) + "\n"; }

/// Checks scenario invariants against the ontology: param resolution and
/// bounds, layer vocabulary, ego/lead plausibility, function positivity.
inline ValidationReport validate_scenario(const Scenario& s, const Ontology& o) {
  ValidationReport report;
  const std::string sid = s.id.empty() ? "scenario" : s.id;

  for (const auto& [layer_id, elements] : s.layers) {
    const auto vocab_it = layer_vocabulary().find(layer_id);
    if (vocab_it == layer_vocabulary().end()) {
      report.add_error(sid, "layer " + std::to_string(layer_id) + " outside 1..6");
      continue;
    }
    for (const auto& e : elements) {
      if (vocab_it->second.count(e.kind) == 0) {
        report.add_error(sid, "kind \"" + e.kind + "\" not in layer " +
                                  std::to_string(layer_id) + " vocabulary");
      }
    }
  }

  for (const auto& p : s.params) {
    const std::string path = p.param.str();
    const OntologyEntity* e = o.find(p.param);
    if (e == nullptr || e->kind != EntityKind::param) {
      report.add_error(path, "unresolved param \"" + path + "\"");
      continue;
    }
    const Interval bounds = e->bounds_or_unbounded();
    if (p.value) {
      if (*p.value < bounds.lo) {
        report.add_error(path, "value below physical bounds");
      } else if (*p.value > bounds.hi) {
        report.add_error(path, "value above physical bounds");
      }
    } else if (p.range) {
      if (!p.range->valid()) {
        report.add_error(path, "range lower bound exceeds upper bound");
      } else {
        if (p.range->lo < bounds.lo) {
          report.add_error(path, "range below physical bounds");
        }
        if (p.range->hi > bounds.hi) {
          report.add_error(path, "range above physical bounds");
        }
      }
    }
  }

  std::size_t ego_count = 0;
  const auto* dynamic_layer = s.layer(4);
  if (dynamic_layer != nullptr) {
    for (const auto& e : *dynamic_layer) {
      if (e.kind == "ego_vehicle") {
        ++ego_count;
        if (const double* speed = e.num_attr("speed"); speed != nullptr && *speed < 0) {
          report.add_error(sid, "ego_vehicle speed must be non-negative");
        }
      }
      if (e.kind == "lead_vehicle") {
        if (const std::string* profile = e.str_attr("profile");
            profile != nullptr && lead_profiles().count(*profile) == 0) {
          report.add_error(sid, "lead_vehicle profile \"" + *profile + "\" unknown");
        }
        if (const double* gap = e.num_attr("initial_gap");
            gap != nullptr && *gap <= 0) {
          report.add_error(sid, "lead_vehicle initial_gap must be positive");
        }
      }
    }
  }
  if (ego_count > 1) {
    report.add_error(sid, "more than one ego_vehicle in layer 4");
  } else if (ego_count == 0) {
    report.add_warning(sid, "no ego_vehicle in layer 4: scenario is not simulatable");
  }

  if (s.function) {
    const FunctionUnderTest& f = *s.function;
    if (f.sensor_max_range <= 0 || f.reaction_time <= 0 || f.max_decel_at_mu1 <= 0 ||
        f.illum_full <= 0 || f.illum_floor_factor <= 0) {
      report.add_error(sid, "function parameters must be positive");
    }
    if (f.illum_floor_factor > 1) {
      report.add_error(sid, "illum_floor_factor must not exceed 1");
    }
  }

  return report;
}

/// Document-level validation: load errors become report entries.
inline ValidationReport validate_scenario_document(const std::string& document,
                                                   const Ontology& o) {
  try {
    return validate_scenario(load_scenario(document), o);
  } catch (const Error& e) {
    ValidationReport report;
    report.add_error(e.entity(), e.what());
    return report;
  }
}

}  // namespace sotifval
